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

#include "envasr/masking.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace envasr {

void MaskSchedule::validate() const {
  if (width_init % 2 == 0 || width_final % 2 == 0 || width_step % 2 == 1) {
    throw std::invalid_argument("mask schedule widths must stay odd");
  }
  if (width_final < width_init) throw std::invalid_argument("mask schedule width_final < width_init");
  if (!(p_init >= 0.0 && p_init <= 1.0 && p_final >= 0.0 && p_final <= 1.0)) {
    throw std::invalid_argument("mask schedule probabilities must lie in [0, 1]");
  }
  if (stage_steps == 0) throw std::invalid_argument("mask schedule stage_steps must be positive");
  if (!(ramp_rate > 0.0)) throw std::invalid_argument("mask schedule ramp_rate must be positive");
}

std::size_t MaskPlan::count() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)); }

MaskParams mask_params_at(const MaskSchedule& schedule, std::uint64_t step) {
  const std::uint64_t stage = step / schedule.stage_steps;
  const std::uint64_t within = step - stage * schedule.stage_steps;
  const std::uint64_t growth = stage * schedule.width_step;
  const std::size_t width =
      growth >= schedule.width_final - schedule.width_init ? schedule.width_final : schedule.width_init + growth;
  const double t = static_cast<double>(within) / static_cast<double>(schedule.stage_steps);
  const double prob = schedule.p_init + (schedule.p_final - schedule.p_init) * (1.0 - std::exp(-schedule.ramp_rate * t));
  return {width, prob};
}

namespace {

void require_args(std::size_t width, double prob) {
  if (width % 2 == 0) throw std::invalid_argument("mask width must be odd, got " + std::to_string(width));
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("mask probability outside [0, 1]");
}

void mask_span(std::vector<std::uint8_t>& mask, std::size_t begin, std::size_t len, std::size_t width, double prob,
               std::mt19937_64& rng) {
  std::bernoulli_distribution center(prob);
  const std::size_t half = width / 2;
  for (std::size_t i = 0; i < len; ++i) {
    if (!center(rng)) continue;
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(len, i + half + 1);
    std::fill(mask.begin() + static_cast<std::ptrdiff_t>(begin + lo),
              mask.begin() + static_cast<std::ptrdiff_t>(begin + hi), 1);
  }
}

}  // namespace

MaskPlan sample_mask(std::size_t seq_len, std::size_t width, double prob, std::mt19937_64& rng) {
  if (seq_len == 0) throw std::invalid_argument("sample_mask: empty sequence");
  require_args(width, prob);
  MaskPlan plan{width, prob, std::vector<std::uint8_t>(seq_len, 0)};
  mask_span(plan.mask, 0, seq_len, width, prob, rng);
  return plan;
}

MaskPlan sample_segmented_mask(std::span<const std::size_t> segment_lengths, std::size_t width, double prob,
                               std::mt19937_64& rng) {
  require_args(width, prob);
  const std::size_t total = std::accumulate(segment_lengths.begin(), segment_lengths.end(), std::size_t{0});
  if (total == 0) throw std::invalid_argument("sample_segmented_mask: empty sequence");
  MaskPlan plan{width, prob, std::vector<std::uint8_t>(total, 0)};
  std::size_t offset = 0;
  for (std::size_t len : segment_lengths) {
    mask_span(plan.mask, offset, len, width, prob, rng);
    offset += len;
  }
  return plan;
}

double expected_coverage(double prob, std::size_t width) {
  return 1.0 - std::pow(1.0 - prob, static_cast<double>(width));
}

}  // namespace envasr
