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

#include <cstddef>
#include <random>

#include "envasr/tensor.hpp"

namespace envasr {

struct SpecAugmentPolicy {
  std::size_t freq_masks = 2;
  std::size_t freq_max = 12;
  std::size_t time_masks = 2;
  std::size_t time_max = 10;
};

/// Zeroes `freq_masks` bands of width U[0, freq_max] and `time_masks` spans
/// of width U[0, time_max] in a [T x D] feature matrix. Throws when a
/// maximum width exceeds the matching extent.
Tensor specaugment(const Tensor& features, const SpecAugmentPolicy& policy, std::mt19937_64& rng);

}  // namespace envasr
