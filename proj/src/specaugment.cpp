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

#include "envasr/specaugment.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace envasr {

Tensor specaugment(const Tensor& features, const SpecAugmentPolicy& policy, std::mt19937_64& rng) {
  if (features.ndim() != 2) throw std::invalid_argument("specaugment: expected a [T x D] matrix");
  const std::size_t t = features.rows(), d = features.cols();
  if (policy.freq_masks > 0 && policy.freq_max > d) {
    throw std::invalid_argument("specaugment: freq_max " + std::to_string(policy.freq_max) + " exceeds " +
                                std::to_string(d) + " feature dims");
  }
  if (policy.time_masks > 0 && policy.time_max > t) {
    throw std::invalid_argument("specaugment: time_max " + std::to_string(policy.time_max) + " exceeds " +
                                std::to_string(t) + " frames");
  }
  auto in = features.data();
  std::vector<Real> out(in.begin(), in.end());
  for (std::size_t m = 0; m < policy.freq_masks; ++m) {
    const std::size_t width = std::uniform_int_distribution<std::size_t>(0, policy.freq_max)(rng);
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, d - width)(rng);
    for (std::size_t r = 0; r < t; ++r)
      for (std::size_t c = start; c < start + width; ++c) out[r * d + c] = 0.0;
  }
  for (std::size_t m = 0; m < policy.time_masks; ++m) {
    const std::size_t width = std::uniform_int_distribution<std::size_t>(0, policy.time_max)(rng);
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, t - width)(rng);
    for (std::size_t r = start; r < start + width; ++r)
      for (std::size_t c = 0; c < d; ++c) out[r * d + c] = 0.0;
  }
  return Tensor::from(features.shape(), std::move(out));
}

}  // namespace envasr
