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
#include <optional>
#include <span>
#include <vector>

#include "envasr/features.hpp"
#include "envasr/layers.hpp"
#include "envasr/masking.hpp"
#include "envasr/params.hpp"

// Audio-visual masked language model. Raw audio patches and video tubelets
// are projected into one sequence (audio first, then video), encoded by a
// stack of full-attention transformer blocks and trained to predict the
// k-means token of every masked position.
namespace envasr::avbert {

struct AvBertConfig {
  std::size_t model_dim = 32;
  std::size_t num_blocks = 2;
  std::size_t heads = 4;
  std::size_t ff_dim = 0;  // 0 means 4 * model_dim
  std::size_t vocab_size = 24;
  std::size_t audio_patch_dim = features::kAudioPatchDim;
  std::size_t video_patch_dim = features::kVideoPatchDim;
  std::size_t max_audio_positions = 1024;
  std::size_t max_video_time_steps = 64;
  std::size_t max_video_spatial = 256;
  MaskSchedule mask;
  std::uint64_t seed = 0;

  static AvBertConfig full(std::size_t vocab_size);
  static AvBertConfig toy(std::size_t vocab_size);

  std::size_t feed_forward_dim() const { return ff_dim ? ff_dim : 4 * model_dim; }
  void validate() const;
};

struct MultimodalBatch {
  features::AudioPatchSeq audio;
  std::optional<features::VideoPatchSeq> video;
  /// One token id per patch, audio patches first.
  std::vector<std::size_t> labels;
  /// Mask over the concatenated sequence; left empty to have the trainer
  /// draw one from the schedule.
  MaskPlan mask;

  std::size_t audio_length() const { return audio.patches.defined() ? audio.patches.rows() : 0; }
  std::size_t video_length() const { return video ? video->patches.rows() : 0; }
  std::size_t length() const { return audio_length() + video_length(); }
};

struct EnvEmbeddings {
  Tensor vectors;  // [L x model_dim]
  bool frozen = false;
};

class AvBertModel {
 public:
  explicit AvBertModel(const AvBertConfig& config);

  const AvBertConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  /// Projects, normalizes and position-encodes both modalities into one
  /// [L x model_dim] sequence. Masked rows get the learned mask embedding of
  /// their modality in place of their content projection. `mask` may be
  /// empty (nothing masked).
  Tensor embed(const MultimodalBatch& batch, std::span<const std::uint8_t> mask) const;

  /// Transformer stack without attention masking. Attention matrices are
  /// appended to `attention_weights` when given.
  EnvEmbeddings encode(const Tensor& embedded, std::vector<Tensor>* attention_weights = nullptr) const;

  Tensor logits(const EnvEmbeddings& env) const;

  /// Cross entropy of the vocabulary head at masked positions only.
  Tensor mlm_loss(const EnvEmbeddings& env, std::span<const std::size_t> labels, const MaskPlan& mask) const;

  /// Audio-only forward pass with gradient recording disabled.
  EnvEmbeddings extract_env_embeddings(const features::AudioPatchSeq& audio) const;

 private:
  struct Block {
    LayerNorm attn_norm;
    AttentionLayer attention;
    LayerNorm ff_norm;
    FeedForward ff;
  };

  Tensor embed_stream(const Tensor& patches, const Linear& proj, const Tensor& norm_gamma, const Tensor& norm_beta,
                      const Tensor& mask_embedding, std::size_t modality, const Tensor& positions,
                      std::span<const std::uint8_t> mask) const;

  AvBertConfig config_;
  ParameterSet params_;
  Linear audio_proj_, video_proj_;
  Tensor audio_norm_gamma_, audio_norm_beta_, video_norm_gamma_, video_norm_beta_;
  Tensor modality_table_;
  Tensor audio_mask_embedding_, video_mask_embedding_;
  Tensor audio_positions_, video_temporal_, video_spatial_;
  std::vector<Block> blocks_;
  LayerNorm final_norm_;
  Linear head_;
};

/// Draws a mask for `batch` from the schedule at `step`. Audio and video
/// segments are masked independently. If the draw masks nothing, a single
/// uniformly chosen center is masked so every step has a target.
MaskPlan draw_mask(const MultimodalBatch& batch, const MaskSchedule& schedule, std::uint64_t step,
                   std::mt19937_64& rng);

struct PretrainStepResult {
  double loss = 0.0;
  double perplexity = 0.0;
  std::size_t mask_width = 0;
  double mask_prob = 0.0;
  std::vector<MaskPlan> masks;
};

/// One optimizer update on the mean MLM loss over `batches`. Batches with a
/// preset mask keep it; the rest draw one via mask_params_at(step) from a
/// stream keyed by (seed, step).
PretrainStepResult pretrain_step(AvBertModel& model, std::span<const MultimodalBatch> batches,
                                 const AdamOptions& adam, std::uint64_t step, std::uint64_t seed);

/// Fraction of masked positions whose argmax prediction equals the label,
/// using each batch's own mask.
double masked_accuracy(const AvBertModel& model, std::span<const MultimodalBatch> batches);

}  // namespace envasr::avbert
