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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "envasr/masking.hpp"

namespace envasr {
namespace {

TEST(Schedule, StartsAtWidthOneProbFifteen) {
  const MaskParams p = mask_params_at({}, 0);
  EXPECT_EQ(p.width, 1u);
  EXPECT_EQ(p.prob, 0.15);
}

TEST(Schedule, ResetAndWidenEveryStage) {
  const MaskSchedule s;
  const MaskParams p = mask_params_at(s, 10000);
  EXPECT_EQ(p.width, 3u);
  EXPECT_EQ(p.prob, 0.15);
  const MaskParams end = mask_params_at(s, 59999);
  EXPECT_EQ(end.width, 11u);
  // 0.15 + 0.30 * (1 - exp(-ln(100) * 9999 / 10000))
  EXPECT_NEAR(end.prob, 0.15 + 0.30 * (1.0 - std::exp(-std::log(100.0) * 0.9999)), 1e-15);
  EXPECT_NEAR(end.prob, 0.45, 0.005);
}

TEST(Schedule, WidthIsAStepFunctionOverOddValues) {
  const MaskSchedule s;
  std::size_t previous = 1;
  for (std::uint64_t step = 0; step < 80000; step += 250) {
    const std::size_t w = mask_params_at(s, step).width;
    EXPECT_EQ(w % 2, 1u);
    EXPECT_GE(w, previous);
    EXPECT_EQ(w, std::min<std::size_t>(1 + 2 * (step / 10000), 11));
    previous = w;
  }
  for (std::uint64_t k = 1; k <= 5; ++k) {
    EXPECT_EQ(mask_params_at(s, k * 10000 - 1).width + 2, mask_params_at(s, k * 10000).width);
  }
  EXPECT_EQ(mask_params_at(s, 50000).width, 11u);
  EXPECT_EQ(mask_params_at(s, 1000000).width, 11u);
}

TEST(Schedule, ProbIncreasesWithinStage) {
  const MaskSchedule s;
  for (std::uint64_t stage : {0u, 3u, 7u}) {
    double previous = -1;
    for (std::uint64_t t = 0; t < 10000; t += 37) {
      const double p = mask_params_at(s, stage * 10000 + t).prob;
      EXPECT_GT(p, previous);
      EXPECT_GE(p, 0.15);
      EXPECT_LT(p, 0.45);
      previous = p;
    }
  }
}

TEST(Schedule, ValidationRejectsEvenWidths) {
  MaskSchedule s;
  s.width_init = 2;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.width_step = 1;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.p_final = 1.5;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  EXPECT_NO_THROW(MaskSchedule{}.validate());
}

TEST(SampleMask, ExtremeProbabilities) {
  std::mt19937_64 rng(1);
  EXPECT_EQ(sample_mask(50, 5, 0.0, rng).count(), 0u);
  for (std::size_t w : {1u, 3u, 11u}) EXPECT_EQ(sample_mask(50, w, 1.0, rng).count(), 50u);
  EXPECT_THROW(sample_mask(10, 4, 0.2, rng), std::invalid_argument);
  EXPECT_THROW(sample_mask(0, 1, 0.2, rng), std::invalid_argument);
}

TEST(SampleMask, FractionWithinBinomialBound) {
  std::mt19937_64 rng(2);
  const MaskPlan plan = sample_mask(10000, 1, 0.15, rng);
  const double frac = plan.count() / 10000.0;
  EXPECT_LT(std::abs(frac - 0.15), 3 * std::sqrt(0.15 * 0.85 / 10000));
}

TEST(SampleMask, DeterministicGivenSeed) {
  std::mt19937_64 a(9), b(9);
  EXPECT_EQ(sample_mask(300, 5, 0.3, a).mask, sample_mask(300, 5, 0.3, b).mask);
}

TEST(SampleMask, EveryMaskedPositionIsNearACenterRun) {
  std::mt19937_64 rng(3);
  const MaskPlan plan = sample_mask(200, 7, 0.05, rng);
  // Every maximal run of masked positions is at least min(width, run at an
  // edge) long, since each center masks a full span unless clipped.
  std::size_t i = 0;
  while (i < plan.mask.size()) {
    if (!plan.mask[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < plan.mask.size() && plan.mask[j]) ++j;
    const bool at_edge = i == 0 || j == plan.mask.size();
    if (!at_edge) {
      EXPECT_GE(j - i, 7u);
    }
    i = j;
  }
}

TEST(SegmentedMask, SegmentsAreMaskedIndependently) {
  // Drawing segment by segment from one stream is the same as masking each
  // segment on its own, so no span can cross the seam.
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 joint(seed), split(seed);
    const MaskPlan plan = sample_segmented_mask(std::vector<std::size_t>{30, 20}, 11, 0.1, joint);
    const MaskPlan a = sample_mask(30, 11, 0.1, split), b = sample_mask(20, 11, 0.1, split);
    std::vector<std::uint8_t> want = a.mask;
    want.insert(want.end(), b.mask.begin(), b.mask.end());
    EXPECT_EQ(plan.mask, want);
  }
}

TEST(SegmentedMask, FullProbabilityStaysInsideNonEmptySegments) {
  std::mt19937_64 rng(5);
  const MaskPlan plan = sample_segmented_mask(std::vector<std::size_t>{5, 0, 4}, 3, 1.0, rng);
  EXPECT_EQ(plan.count(), 9u);
  EXPECT_THROW(sample_segmented_mask(std::vector<std::size_t>{0, 0}, 3, 0.5, rng), std::invalid_argument);
}

TEST(Coverage, ClosedForm) {
  EXPECT_EQ(expected_coverage(0.0, 7), 0.0);
  EXPECT_DOUBLE_EQ(expected_coverage(0.3, 1), 0.3);
  EXPECT_NEAR(expected_coverage(0.45, 11), 1 - std::pow(0.55, 11), 1e-15);
  EXPECT_NEAR(expected_coverage(0.45, 11), 0.99861, 5e-6);
}

TEST(Coverage, MonteCarloInteriorRateWithinThreeSigma) {
  for (auto [p, w] : {std::pair{0.15, std::size_t{1}}, {0.3, std::size_t{5}}, {0.45, std::size_t{11}}}) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(p * 1000) + w);
    // Positions w apart are covered by disjoint sets of possible centers,
    // so their indicators are independent.
    const std::size_t seq = 1100;
    std::size_t hits = 0, trials = 0;
    while (trials < 100000) {
      const MaskPlan plan = sample_mask(seq, w, p, rng);
      for (std::size_t pos = w; pos + w < seq; pos += w) {
        hits += plan.mask[pos];
        ++trials;
      }
    }
    const double c = expected_coverage(p, w);
    const double sigma = std::sqrt(c * (1 - c) / static_cast<double>(trials));
    EXPECT_LT(std::abs(static_cast<double>(hits) / trials - c), 3 * sigma) << "p=" << p << " w=" << w;
  }
}

}  // namespace
}  // namespace envasr
