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

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "envasr/tensor.hpp"

// Reference implementations used only to check the library.
namespace envasr::testing {

/// Log-normalized random rows, [(rows) x classes].
inline std::vector<Real> random_log_probs(std::size_t rows, std::size_t classes, std::mt19937_64& rng,
                                          Real spread = 3.0) {
  std::uniform_real_distribution<Real> u(-spread, spread);
  std::vector<Real> out(rows * classes);
  for (std::size_t r = 0; r < rows; ++r) {
    Real z = 0.0;
    for (std::size_t k = 0; k < classes; ++k) z += std::exp(out[r * classes + k] = u(rng));
    for (std::size_t k = 0; k < classes; ++k) out[r * classes + k] -= std::log(z);
  }
  return out;
}

/// Sums path probabilities over every alignment: all orderings of T blanks
/// and U labels whose final symbol is a blank, enumerated as bitmasks.
inline Real brute_force_transducer_nll(const std::vector<Real>& log_probs, std::size_t frames, std::size_t classes,
                                       const std::vector<std::size_t>& labels, std::size_t blank) {
  const std::size_t u_len = labels.size(), steps = frames + u_len, cols = u_len + 1;
  Real total = 0.0;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << steps); ++bits) {
    // Bit i set = step i emits a label.
    if (static_cast<std::size_t>(__builtin_popcountll(bits)) != u_len) continue;
    if (bits >> (steps - 1) & 1) continue;  // last step must be a blank
    std::size_t t = 0, u = 0;
    Real logp = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
      const Real* row = &log_probs[(t * cols + u) * classes];
      if (bits >> i & 1) {
        logp += row[labels[u]];
        ++u;
      } else {
        logp += row[blank];
        ++t;
      }
    }
    total += std::exp(logp);
  }
  return -std::log(total);
}

/// Memoized top-down Levenshtein distance over words.
inline std::size_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == 0) return j;
    if (j == 0) return i;
    auto key = std::pair{i, j};
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const std::size_t best = std::min({d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1])});
    return memo[key] = best;
  };
  return d(a.size(), b.size());
}

/// Index of the nearest row of `centers` by exhaustive search, first index
/// on ties.
inline std::size_t nearest_center(const Tensor& centers, std::span<const Real> x) {
  std::size_t best = 0;
  Real best_d = INFINITY;
  for (std::size_t k = 0; k < centers.rows(); ++k) {
    Real d = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) d += (x[j] - centers.at(k, j)) * (x[j] - centers.at(k, j));
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

inline std::vector<std::string> random_words(std::size_t n, std::size_t alphabet, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, alphabet - 1);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("w" + std::to_string(pick(rng)));
  return out;
}

}  // namespace envasr::testing
