// Copyright 2026 The envasr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "envasr/vq.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "envasr/serialize.hpp"

namespace envasr::vq {

namespace {

Real squared_distance(const Real* a, const Real* b, std::size_t d) {
  Real acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const Real diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

struct Nearest {
  std::size_t index;
  Real distance;
};

Nearest nearest_center(const Real* x, const std::vector<Real>& centers, std::size_t k, std::size_t d) {
  Nearest best{0, std::numeric_limits<Real>::infinity()};
  for (std::size_t c = 0; c < k; ++c) {
    const Real dist = squared_distance(x, centers.data() + c * d, d);
    if (dist < best.distance) best = {c, dist};
  }
  return best;
}

}  // namespace

std::string_view modality_name(Modality m) { return m == Modality::kAudio ? "audio" : "video"; }

Modality parse_modality(std::string_view name) {
  if (name == "audio") return Modality::kAudio;
  if (name == "video") return Modality::kVideo;
  throw std::invalid_argument("unknown modality '" + std::string(name) + "'");
}

Codebook train_kmeans(const Tensor& vectors, std::size_t k, std::size_t max_iters, std::uint64_t seed,
                      Modality modality, std::size_t vocab_offset, KMeansTrace* trace) {
  if (vectors.ndim() != 2) throw std::invalid_argument("train_kmeans: expected an N x D matrix");
  const std::size_t n = vectors.rows(), d = vectors.cols();
  if (k == 0) throw std::invalid_argument("train_kmeans: k must be at least 1");
  if (n < k) {
    throw std::invalid_argument("train_kmeans: " + std::to_string(n) + " vectors are fewer than k=" +
                                std::to_string(k));
  }
  const Real* x = vectors.data().data();
  std::mt19937_64 rng(seed);

  // k-means++ seeding.
  std::vector<Real> centers(k * d);
  std::vector<Real> best_dist(n, std::numeric_limits<Real>::infinity());
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  std::copy_n(x + first * d, d, centers.begin());
  for (std::size_t c = 1; c < k; ++c) {
    Real total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best_dist[i] = std::min(best_dist[i], squared_distance(x + i * d, centers.data() + (c - 1) * d, d));
      total += best_dist[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      Real target = std::uniform_real_distribution<Real>(0.0, total)(rng);
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= best_dist[i];
        if (target < 0.0 && best_dist[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    std::copy_n(x + pick * d, d, centers.begin() + static_cast<std::ptrdiff_t>(c * d));
  }

  std::vector<std::size_t> assignment(n, k);
  std::vector<Real> dist(n);
  auto assign_all = [&]() {
    bool changed = false;
    Real total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Nearest nn = nearest_center(x + i * d, centers, k, d);
      changed = changed || nn.index != assignment[i];
      assignment[i] = nn.index;
      dist[i] = nn.distance;
      total += nn.distance;
    }
    return std::pair{changed, total / static_cast<Real>(n)};
  };

  auto [changed, current] = assign_all();
  if (trace) {
    trace->distortion = {current};
    trace->iterations = 0;
  }
  std::vector<Real> sums(k * d);
  std::vector<std::size_t> counts(k);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = assignment[i];
      ++counts[c];
      for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += x[i * d + j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) centers[c * d + j] = sums[c * d + j] / static_cast<Real>(counts[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      // Re-seed at the worst-served point; it then contributes zero error.
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (dist[i] > dist[far]) far = i;
      std::copy_n(x + far * d, d, centers.begin() + static_cast<std::ptrdiff_t>(c * d));
      dist[far] = 0.0;
    }
    std::tie(changed, current) = assign_all();
    if (trace) {
      trace->distortion.push_back(current);
      trace->iterations = iter + 1;
    }
    if (!changed) break;
  }
  return {Tensor::from({k, d}, std::move(centers)), modality, vocab_offset, seed};
}

TokenSeq assign_tokens(const Codebook& codebook, const Tensor& vectors) {
  const std::size_t d = codebook.dim(), k = codebook.k();
  if (vectors.ndim() != 2 || vectors.cols() != d) {
    throw std::invalid_argument("assign_tokens: vectors of width " + std::to_string(vectors.cols()) +
                                " do not match codebook dim " + std::to_string(d));
  }
  const std::size_t n = vectors.rows();
  const Real* x = vectors.data().data();
  const std::vector<Real> centers(codebook.centers.data().begin(), codebook.centers.data().end());
  TokenSeq out;
  out.ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.ids[i] = nearest_center(x + i * d, centers, k, d).index + codebook.vocab_offset;
  out.segments.push_back({codebook.modality, 0, n});
  return out;
}

Real distortion(const Tensor& vectors, const Tensor& centers) {
  const std::size_t n = vectors.rows(), d = vectors.cols();
  if (centers.cols() != d) throw std::invalid_argument("distortion: dimension mismatch");
  const std::vector<Real> c(centers.data().begin(), centers.data().end());
  Real total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += nearest_center(vectors.data().data() + i * d, c, centers.rows(), d).distance;
  return total / static_cast<Real>(n);
}

std::size_t unified_vocab_size(const Codebook& audio, const Codebook& video) {
  if (audio.modality != Modality::kAudio || video.modality != Modality::kVideo) {
    throw std::invalid_argument("unified_vocab_size: expected an audio and a video codebook");
  }
  const std::size_t a_lo = audio.vocab_offset, a_hi = a_lo + audio.k();
  const std::size_t v_lo = video.vocab_offset, v_hi = v_lo + video.k();
  if (a_lo < v_hi && v_lo < a_hi) throw std::invalid_argument("unified_vocab_size: codebook id ranges overlap");
  if (!((a_lo == 0 && v_lo == a_hi) || (v_lo == 0 && a_lo == v_hi))) {
    throw std::invalid_argument("unified_vocab_size: id ranges are not contiguous from 0");
  }
  return audio.k() + video.k();
}

Tensor reservoir_sample(const Tensor& vectors, std::size_t cap, std::uint64_t seed) {
  const std::size_t n = vectors.rows(), d = vectors.cols();
  if (n <= cap) return vectors.detach();
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> reservoir(cap);
  for (std::size_t i = 0; i < cap; ++i) reservoir[i] = i;
  for (std::size_t i = cap; i < n; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i)(rng);
    if (j < cap) reservoir[j] = i;
  }
  std::sort(reservoir.begin(), reservoir.end());
  auto in = vectors.data();
  std::vector<Real> out;
  out.reserve(cap * d);
  for (std::size_t idx : reservoir)
    out.insert(out.end(), in.begin() + static_cast<std::ptrdiff_t>(idx * d),
               in.begin() + static_cast<std::ptrdiff_t>((idx + 1) * d));
  return Tensor::from({cap, d}, std::move(out));
}

void save_codebook(const std::filesystem::path& path, const Codebook& codebook) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << modality_name(codebook.modality) << ' ' << codebook.k() << ' ' << codebook.dim() << ' '
      << codebook.vocab_offset << ' ' << codebook.seed << '\n';
  write_tensor(out, codebook.centers);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Codebook load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing codebook manifest");
  std::istringstream ls(line);
  std::string modality;
  std::size_t k = 0, dim = 0;
  Codebook cb;
  if (!(ls >> modality >> k >> dim >> cb.vocab_offset >> cb.seed)) {
    throw std::runtime_error(path.string() + ": malformed codebook manifest '" + line + "'");
  }
  cb.modality = parse_modality(modality);
  cb.centers = read_tensor(in);
  if (cb.centers.ndim() != 2 || cb.k() != k || cb.dim() != dim) {
    throw std::runtime_error(path.string() + ": centers shape does not match manifest");
  }
  return cb;
}

}  // namespace envasr::vq
