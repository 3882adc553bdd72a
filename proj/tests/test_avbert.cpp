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
#include <numeric>
#include <random>

#include "envasr/avbert.hpp"
#include "test_util.hpp"

namespace envasr::avbert {
namespace {

using testing::random_tensor;

AvBertConfig micro_config() {
  AvBertConfig c;
  c.model_dim = 8;
  c.num_blocks = 1;
  c.heads = 2;
  c.vocab_size = 6;
  c.audio_patch_dim = 6;
  c.video_patch_dim = 5;
  c.max_audio_positions = 8;
  c.max_video_time_steps = 2;
  c.max_video_spatial = 4;
  c.seed = 3;
  return c;
}

AvBertConfig small_config() {
  AvBertConfig c = micro_config();
  c.model_dim = 16;
  c.num_blocks = 2;
  c.heads = 4;
  c.vocab_size = 24;
  c.max_audio_positions = 16;
  return c;
}

MultimodalBatch make_batch(const AvBertConfig& c, std::size_t audio_len, std::size_t time_steps, std::size_t spatial,
                           std::mt19937_64& rng) {
  MultimodalBatch b;
  b.audio.patches = random_tensor({audio_len, c.audio_patch_dim}, rng);
  b.audio.whitened = true;
  if (time_steps * spatial > 0) {
    features::VideoPatchSeq v;
    v.patches = random_tensor({time_steps * spatial, c.video_patch_dim}, rng, 0.0, 1.0);
    v.grid = {time_steps, 1, spatial};
    b.video = v;
  }
  std::uniform_int_distribution<std::size_t> label(0, c.vocab_size - 1);
  for (std::size_t i = 0; i < b.length(); ++i) b.labels.push_back(label(rng));
  return b;
}

std::vector<Real> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

TEST(AvBert, SequenceIsAudioThenVideo) {
  std::mt19937_64 rng(1);
  const AvBertModel model(micro_config());
  const MultimodalBatch b = make_batch(model.config(), 5, 2, 4, rng);
  const Tensor e = model.embed(b, {});
  EXPECT_EQ(e.rows(), 13u);
  EXPECT_EQ(model.encode(e).vectors.rows(), 13u);
}

TEST(AvBert, ModalityAndPositionEmbeddingsDistinguishRows) {
  // Identical raw content everywhere: rows can only differ through the
  // modality and position tables.
  AvBertConfig c = micro_config();
  c.audio_patch_dim = c.video_patch_dim = 5;
  const AvBertModel model(c);
  MultimodalBatch b;
  b.audio.patches = Tensor::full({4, 5}, 0.5);
  features::VideoPatchSeq v;
  v.patches = Tensor::full({4, 5}, 0.5);
  v.grid = {1, 2, 2};
  b.video = v;
  b.labels.assign(8, 0);
  const Tensor out = model.encode(model.embed(b, {})).vectors;
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = i + 1; j < 8; ++j) {
      Real diff = 0.0;
      for (std::size_t k = 0; k < out.cols(); ++k) diff += std::abs(out.at(i, k) - out.at(j, k));
      EXPECT_GT(diff, 1e-6) << i << " vs " << j;
    }
  }
}

TEST(AvBert, EncoderIsPermutationEquivariant) {
  std::mt19937_64 rng(2);
  const AvBertModel model(small_config());
  const Tensor x = random_tensor({7, 16}, rng);
  std::vector<std::size_t> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const Tensor y = model.encode(x).vectors;
  const Tensor yp = model.encode(gather_rows(x, perm)).vectors;
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t k = 0; k < 16; ++k) EXPECT_NEAR(yp.at(i, k), y.at(perm[i], k), 1e-12);
}

TEST(AvBert, AttentionRowsAreDistributions) {
  std::mt19937_64 rng(3);
  const AvBertModel model(small_config());
  std::vector<Tensor> weights;
  model.encode(random_tensor({9, 16}, rng), &weights);
  ASSERT_FALSE(weights.empty());
  for (const Tensor& w : weights) {
    const std::size_t n = w.shape().back();
    const auto v = w.data();
    for (std::size_t r = 0; r < v.size() / n; ++r) {
      Real s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        EXPECT_GE(v[r * n + k], 0.0);
        s += v[r * n + k];
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(AvBert, InitialLossIsNearUniform) {
  std::mt19937_64 rng(4);
  const AvBertModel model(small_config());
  const MultimodalBatch b = make_batch(model.config(), 16, 2, 4, rng);
  const MaskPlan mask = sample_mask(b.length(), 1, 0.5, rng);
  const Real loss = model.mlm_loss(model.encode(model.embed(b, mask.mask)), b.labels, mask).item();
  EXPECT_NEAR(loss, std::log(24.0), 0.15 * std::log(24.0));
}

TEST(AvBert, UnmaskedLabelsDoNotAffectLoss) {
  std::mt19937_64 rng(5);
  const AvBertModel model(small_config());
  MultimodalBatch b = make_batch(model.config(), 10, 1, 4, rng);
  const MaskPlan mask = sample_mask(b.length(), 3, 0.2, rng);
  ASSERT_GT(mask.count(), 0u);
  ASSERT_LT(mask.count(), b.length());
  const EnvEmbeddings env = model.encode(model.embed(b, mask.mask));
  const Real before = model.mlm_loss(env, b.labels, mask).item();
  for (std::size_t i = 0; i < b.length(); ++i)
    if (!mask.mask[i]) b.labels[i] = (b.labels[i] + 1) % 24;
  EXPECT_EQ(model.mlm_loss(env, b.labels, mask).item(), before);
}

TEST(AvBert, MaskedContentIsHidden) {
  std::mt19937_64 rng(6);
  const AvBertModel model(small_config());
  MultimodalBatch b = make_batch(model.config(), 10, 1, 4, rng);
  std::vector<std::uint8_t> mask(b.length(), 0);
  mask[3] = mask[4] = mask[11] = 1;
  const Tensor before = model.embed(b, mask);
  b.audio.patches.mutable_data()[3 * 6 + 2] += 5.0;
  b.video->patches.mutable_data()[1 * 5 + 0] += 5.0;
  EXPECT_EQ(values(model.embed(b, mask)), values(before));
  b.audio.patches.mutable_data()[0] += 5.0;  // unmasked row
  EXPECT_NE(values(model.embed(b, mask)), values(before));
}

TEST(AvBert, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  const AvBertModel model(micro_config());
  const MultimodalBatch b = make_batch(model.config(), 4, 1, 4, rng);
  MaskPlan mask{1, 0.5, {1, 0, 0, 1, 0, 1, 0, 0}};
  const auto report = testing::gradcheck(
      [&] { return model.mlm_loss(model.encode(model.embed(b, mask.mask)), b.labels, mask); },
      testing::all_parameters(model.parameters()), 1e-6);
  EXPECT_LT(report.max_rel_error, 1e-4) << report.worst;
  EXPECT_GT(report.checked, 300u);
}

TEST(AvBert, TrainingReducesLoss) {
  std::mt19937_64 rng(8);
  AvBertModel model(small_config());
  MultimodalBatch b = make_batch(model.config(), 12, 2, 4, rng);
  b.mask = sample_mask(b.length(), 1, 0.4, rng);
  const std::vector<MultimodalBatch> batches{b};
  const double first = pretrain_step(model, batches, {1e-3}, 0, 1).loss;
  double last = first;
  for (std::uint64_t s = 1; s < 100; ++s) last = pretrain_step(model, batches, {1e-3}, s, 1).loss;
  EXPECT_LT(last, 0.5 * first);
}

TEST(AvBert, PretrainStepIsDeterministic) {
  std::mt19937_64 rng(9);
  const MultimodalBatch b = make_batch(small_config(), 12, 2, 4, rng);
  const std::vector<MultimodalBatch> batches{b};
  AvBertModel m1(small_config()), m2(small_config());
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto r1 = pretrain_step(m1, batches, {}, s, 11);
    const auto r2 = pretrain_step(m2, batches, {}, s, 11);
    EXPECT_EQ(r1.loss, r2.loss);
    EXPECT_EQ(r1.masks[0].mask, r2.masks[0].mask);
  }
  EXPECT_EQ(parameter_hash(m1.parameters()), parameter_hash(m2.parameters()));
}

TEST(AvBert, ScheduleDrivesDrawnMasks) {
  std::mt19937_64 rng(10);
  AvBertModel model(small_config());
  const MultimodalBatch b = make_batch(model.config(), 16, 2, 4, rng);
  const std::vector<MultimodalBatch> batches{b};
  EXPECT_EQ(pretrain_step(model, batches, {}, 9999, 1).mask_width, 1u);
  const auto r = pretrain_step(model, batches, {}, 10000, 1);
  EXPECT_EQ(r.mask_width, 3u);
  EXPECT_DOUBLE_EQ(r.mask_prob, 0.15);
  EXPECT_EQ(r.masks[0].width, 3u);
}

TEST(AvBert, DrawnMaskAlwaysHasATargetInsideOneSegment) {
  std::mt19937_64 rng(11);
  const MultimodalBatch b = make_batch(small_config(), 5, 1, 4, rng);
  MaskSchedule never;
  never.p_init = never.p_final = 0.0;
  never.width_init = 11;
  for (int trial = 0; trial < 50; ++trial) {
    const MaskPlan m = draw_mask(b, never, 0, rng);
    ASSERT_GT(m.count(), 0u);
    const auto audio_hits = std::count(m.mask.begin(), m.mask.begin() + 5, 1);
    const auto video_hits = std::count(m.mask.begin() + 5, m.mask.end(), 1);
    EXPECT_TRUE(audio_hits == 0 || video_hits == 0);
  }
}

TEST(AvBert, EnvEmbeddingsAreFrozenAndRepeatable) {
  std::mt19937_64 rng(12);
  const AvBertModel model(small_config());
  features::AudioPatchSeq audio;
  audio.patches = random_tensor({9, 6}, rng);
  const std::uint64_t hash = parameter_hash(model.parameters());
  const EnvEmbeddings a = model.extract_env_embeddings(audio);
  const EnvEmbeddings b = model.extract_env_embeddings(audio);
  EXPECT_TRUE(a.frozen);
  EXPECT_FALSE(a.vectors.requires_grad());
  EXPECT_EQ(a.vectors.rows(), 9u);
  EXPECT_EQ(values(a.vectors), values(b.vectors));
  EXPECT_EQ(parameter_hash(model.parameters()), hash);
}

TEST(AvBert, InputValidation) {
  std::mt19937_64 rng(13);
  const AvBertModel model(small_config());
  MultimodalBatch b = make_batch(model.config(), 17, 0, 0, rng);
  EXPECT_THROW(model.embed(b, {}), std::invalid_argument);  // exceeds position table
  b = make_batch(model.config(), 4, 0, 0, rng);
  const std::vector<std::uint8_t> wrong(3, 0);
  EXPECT_THROW(model.embed(b, wrong), std::invalid_argument);
  const EnvEmbeddings env = model.encode(model.embed(b, {}));
  EXPECT_THROW(model.mlm_loss(env, b.labels, MaskPlan{1, 0.0, std::vector<std::uint8_t>(4, 0)}), std::invalid_argument);
  AvBertConfig bad = small_config();
  bad.heads = 3;
  EXPECT_THROW(AvBertModel{bad}, std::invalid_argument);
}

TEST(AvBert, ToyParameterInventory) {
  // d=32, two blocks, ff 128, 24 classes, default patch dims and tables.
  const std::size_t d = 32, ff = 128, v = 24;
  const std::size_t stems = (192 * d + d) + (2304 * d + d) + 4 * d;
  const std::size_t tables = 2 * d + 2 * d + 1024 * d + 64 * d + 256 * d;
  const std::size_t block = 2 * d + 4 * (d * d + d) + 2 * d + (d * ff + ff) + (ff * d + d);
  const std::size_t expected = stems + tables + 2 * block + 2 * d + (d * v + v);
  EXPECT_EQ(expected, 149464u);
  const AvBertModel model(AvBertConfig::toy(24));
  EXPECT_EQ(count_parameters(model.parameters()), expected);
}

}  // namespace
}  // namespace envasr::avbert
