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

#include <random>

#include "envasr/specaugment.hpp"
#include "envasr/wer.hpp"
#include "oracles.hpp"
#include "printed_examples.hpp"
#include "test_util.hpp"

namespace envasr {
namespace {

using testing::edit_distance;

std::vector<std::string> words(const char* text) { return split_words(text); }

TEST(Wer, Basics) {
  EXPECT_EQ(wer(words("a b c"), words("a b c")), 0.0);
  EXPECT_DOUBLE_EQ(wer(words("a b c"), words("a x c")), 1.0 / 3.0);
  EXPECT_THROW(wer({}, words("a")), std::invalid_argument);
  const EditCounts c = align_words(words("a b c d"), words("a c d e f"));
  EXPECT_EQ(c.deletions, 1u);
  EXPECT_EQ(c.insertions, 2u);
  EXPECT_EQ(c.substitutions, 0u);
  EXPECT_EQ(format_wer_report(c), "wer 0.750000 subs 0 ins 2 dels 1");
}

TEST(Wer, MatchesEditDistanceOracleOnRandomPairs) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto ref = testing::random_words(std::uniform_int_distribution<std::size_t>(1, 12)(rng), 5, rng);
    const auto hyp = testing::random_words(std::uniform_int_distribution<std::size_t>(0, 12)(rng), 5, rng);
    const EditCounts c = align_words(ref, hyp);
    const std::size_t d = edit_distance(ref, hyp);
    EXPECT_EQ(c.edits(), d);
    // The counted operations really turn ref into hyp.
    EXPECT_EQ(ref.size() - c.deletions + c.insertions, hyp.size());
    EXPECT_DOUBLE_EQ(wer(ref, hyp), static_cast<double>(d) / ref.size());
    // Upper bound: replace everything.
    EXPECT_LE(wer(ref, hyp), static_cast<double>(ref.size() + hyp.size()) / ref.size());
    EXPECT_EQ(wer(ref, ref), 0.0);
  }
}

TEST(Wer, PrintedExamples) {
  for (const auto& pair : testing::printed_pairs()) {
    const auto ref = words(pair.ref), hyp = words(pair.hyp);
    const EditCounts c = align_words(ref, hyp);
    EXPECT_EQ(c.edits(), edit_distance(ref, hyp)) << pair.hyp;
    EXPECT_EQ(c.edits(), pair.annotated.edits()) << pair.hyp;
    EXPECT_EQ(c.reference_words, pair.annotated.reference_words);
    EXPECT_DOUBLE_EQ(c.rate(), pair.rate) << pair.hyp;
  }
}

TEST(Wer, PooledCountsDifferFromMeanOfRates) {
  EditCounts total = align_words(words("a"), words("b"));
  total += align_words(words("a b c d"), words("a b c d"));
  EXPECT_DOUBLE_EQ(total.rate(), 1.0 / 5.0);
}

TEST(SpecAugment, ZeroMasksIsIdentity) {
  std::mt19937_64 rng(1);
  const Tensor x = testing::random_tensor({20, 8}, rng);
  const Tensor y = specaugment(x, {0, 0, 0, 0}, rng);
  EXPECT_EQ(std::vector<Real>(y.data().begin(), y.data().end()), std::vector<Real>(x.data().begin(), x.data().end()));
}

TEST(SpecAugment, MaskedEntriesZeroOthersUntouched) {
  std::mt19937_64 rng(2);
  const Tensor x = testing::random_tensor({30, 16}, rng, 1.0, 2.0);  // no natural zeros
  const SpecAugmentPolicy policy{2, 5, 2, 6};
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor y = specaugment(x, policy, rng);
    std::size_t zero_rows = 0, zero_cols = 0;
    for (std::size_t r = 0; r < 30; ++r) {
      bool all = true;
      for (std::size_t c = 0; c < 16; ++c) all &= y.at(r, c) == 0.0;
      zero_rows += all;
    }
    for (std::size_t c = 0; c < 16; ++c) {
      bool all = true;
      for (std::size_t r = 0; r < 30; ++r) all &= y.at(r, c) == 0.0;
      zero_cols += all;
    }
    EXPECT_LE(zero_rows, 2u * 6u);
    EXPECT_LE(zero_cols, 2u * 5u);
    for (std::size_t r = 0; r < 30; ++r) {
      for (std::size_t c = 0; c < 16; ++c) {
        if (y.at(r, c) != 0.0) {
          EXPECT_EQ(y.at(r, c), x.at(r, c));
        }
      }
    }
  }
}

TEST(SpecAugment, DeterministicAndValidated) {
  std::mt19937_64 rng(3);
  const Tensor x = testing::random_tensor({12, 8}, rng);
  std::mt19937_64 a(5), b(5);
  const SpecAugmentPolicy policy{2, 4, 2, 4};
  const Tensor ya = specaugment(x, policy, a), yb = specaugment(x, policy, b);
  EXPECT_EQ(std::vector<Real>(ya.data().begin(), ya.data().end()), std::vector<Real>(yb.data().begin(), yb.data().end()));
  EXPECT_THROW(specaugment(x, {1, 9, 0, 0}, rng), std::invalid_argument);
  EXPECT_THROW(specaugment(x, {0, 0, 1, 13}, rng), std::invalid_argument);
}

}  // namespace
}  // namespace envasr
