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
#include <random>
#include <span>
#include <vector>

namespace envasr {

/// Progressive span-masking curriculum. Every `stage_steps` steps the span
/// width grows by `width_step` (capped at `width_final`) and the center
/// probability restarts from `p_init`, then saturates towards `p_final`.
struct MaskSchedule {
  double p_init = 0.15;
  double p_final = 0.45;
  std::size_t width_init = 1;
  std::size_t width_final = 11;
  std::size_t width_step = 2;
  std::uint64_t stage_steps = 10000;
  double ramp_rate = std::log(100.0);

  /// Throws std::invalid_argument on even widths, probabilities outside
  /// [0, 1] or a zero stage length.
  void validate() const;
};

struct MaskParams {
  std::size_t width;
  double prob;
};

struct MaskPlan {
  std::size_t width = 1;
  double center_prob = 0.0;
  std::vector<std::uint8_t> mask;

  std::size_t count() const;
};

MaskParams mask_params_at(const MaskSchedule& schedule, std::uint64_t step);

/// Independent Bernoulli(prob) centers, each masking the `width`-wide span
/// centered on it (clipped to the sequence).
MaskPlan sample_mask(std::size_t seq_len, std::size_t width, double prob, std::mt19937_64& rng);

/// Masks each segment independently so spans never cross a segment
/// boundary; segment lengths are given in sequence order.
MaskPlan sample_segmented_mask(std::span<const std::size_t> segment_lengths, std::size_t width, double prob,
                               std::mt19937_64& rng);

/// Probability that an interior position is masked: 1 - (1 - prob)^width.
double expected_coverage(double prob, std::size_t width);

}  // namespace envasr
