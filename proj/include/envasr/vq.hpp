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

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "envasr/tensor.hpp"

namespace envasr::vq {

enum class Modality { kAudio, kVideo };

std::string_view modality_name(Modality m);
Modality parse_modality(std::string_view name);

inline constexpr std::size_t kFullAudioCenters = 4096;
inline constexpr std::size_t kFullVideoCenters = 8192;
inline constexpr std::size_t kToyAudioCenters = 64;
inline constexpr std::size_t kToyVideoCenters = 128;
inline constexpr std::size_t kTrainingSampleCap = 200000;

struct Codebook {
  Tensor centers;  // [K x D]
  Modality modality = Modality::kAudio;
  std::size_t vocab_offset = 0;
  std::uint64_t seed = 0;

  std::size_t k() const { return centers.rows(); }
  std::size_t dim() const { return centers.cols(); }
};

struct TokenSegment {
  Modality modality;
  std::size_t begin;
  std::size_t end;
};

struct TokenSeq {
  std::vector<std::size_t> ids;
  std::vector<TokenSegment> segments;
};

struct KMeansTrace {
  /// Mean squared distance after the k-means++ seeding, then after every
  /// Lloyd iteration.
  std::vector<Real> distortion;
  std::size_t iterations = 0;
};

/// Lloyd's algorithm from k-means++ seeding. Stops after `max_iters`
/// iterations or once assignments stop changing; an emptied cluster is
/// re-seeded at the point farthest from its current center.
Codebook train_kmeans(const Tensor& vectors, std::size_t k, std::size_t max_iters, std::uint64_t seed,
                      Modality modality = Modality::kAudio, std::size_t vocab_offset = 0,
                      KMeansTrace* trace = nullptr);

/// Nearest center by squared Euclidean distance, lowest index on ties,
/// plus the codebook's vocabulary offset.
TokenSeq assign_tokens(const Codebook& codebook, const Tensor& vectors);

/// Mean squared distance from each vector to its nearest center.
Real distortion(const Tensor& vectors, const Tensor& centers);

std::size_t unified_vocab_size(const Codebook& audio, const Codebook& video);

/// Seeded reservoir sample of at most `cap` rows, kept in input order.
Tensor reservoir_sample(const Tensor& vectors, std::size_t cap, std::uint64_t seed);

/// Manifest line `modality k dim vocab_offset seed`, then the centers as a
/// raw tensor stream.
void save_codebook(const std::filesystem::path& path, const Codebook& codebook);
Codebook load_codebook(const std::filesystem::path& path);

}  // namespace envasr::vq
