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
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "envasr/avbert.hpp"
#include "envasr/features.hpp"
#include "envasr/layers.hpp"
#include "envasr/params.hpp"
#include "envasr/specaugment.hpp"

// Conformer transducer whose blocks carry an extra attention sublayer. In
// cross-attention mode that sublayer reads frozen environment embeddings;
// in the baseline it is plain self-attention with identically shaped
// weights, so both variants have the same parameter count.
namespace envasr::asr {

enum class FusionMode { kCrossAttention, kSelfAttentionBaseline };

std::string_view fusion_mode_name(FusionMode mode);
FusionMode parse_fusion_mode(std::string_view name);

struct ConformerConfig {
  std::size_t input_dim = features::kAudioPatchDim;
  std::size_t model_dim = 64;
  std::size_t num_blocks = 2;
  std::size_t heads = 4;
  std::size_t ff_mult = 4;
  std::size_t conv_kernel = 7;
  std::size_t subsample_kernel = 3;
  std::size_t subsample_stride = 2;
  std::size_t env_dim = 32;
  /// Output labels, excluding blank. Blank is class index `vocab_size`.
  std::size_t vocab_size = 8;
  FusionMode fusion_mode = FusionMode::kCrossAttention;
  std::uint64_t seed = 0;

  static ConformerConfig full(std::size_t env_dim, std::size_t vocab_size);
  static ConformerConfig toy(std::size_t env_dim, std::size_t vocab_size);

  std::size_t blank() const { return vocab_size; }
  void validate() const;
};

struct Utterance {
  features::AudioPatchSeq features;
  std::vector<std::size_t> labels;
  std::optional<avbert::EnvEmbeddings> env;
};

class ConformerTransducer {
 public:
  explicit ConformerTransducer(const ConformerConfig& config);

  const ConformerConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  /// Kernel-3 stride-2 convolution over time without padding, projecting to
  /// model_dim. T' = (T - 3) / 2 + 1.
  Tensor conv_subsample(const Tensor& features) const;
  /// Shared env_dim -> model_dim adapter applied once before the blocks.
  Tensor project_env(const Tensor& env) const;
  /// The extra attention sublayer of block `index` (output only, no
  /// residual). `env_projected` may be undefined in baseline mode.
  Tensor fusion_attention(std::size_t index, const Tensor& x, const Tensor& env_projected,
                          std::vector<Tensor>* weights = nullptr) const;
  Tensor conformer_block(std::size_t index, const Tensor& x, const Tensor& env_projected) const;

  /// Subsampling plus every block. `env` is required in cross-attention mode
  /// and ignored otherwise.
  Tensor encode(const Tensor& features, const avbert::EnvEmbeddings* env) const;
  /// Recurrent prediction network over [start, labels...]: [(U+1) x d].
  Tensor prediction(std::span<const std::size_t> labels) const;
  /// Joint network log-probabilities [(T * (U+1)) x (V+1)].
  Tensor joint_log_probs(const Tensor& encoded, const Tensor& predicted) const;

  Tensor loss(const Tensor& features, std::span<const std::size_t> labels, const avbert::EnvEmbeddings* env) const;
  Tensor loss(const Utterance& utt) const;

  /// Greedy transducer search, at most `max_symbols_per_frame` labels per
  /// encoder frame.
  std::vector<std::size_t> greedy_decode(const Tensor& features, const avbert::EnvEmbeddings* env,
                                         std::size_t max_symbols_per_frame = 10) const;
  std::vector<std::size_t> greedy_decode(const Utterance& utt, std::size_t max_symbols_per_frame = 10) const;

 private:
  struct Block {
    LayerNorm ff1_norm;
    FeedForward ff1;
    LayerNorm attn_norm;
    AttentionLayer attention;
    LayerNorm fusion_norm;
    AttentionLayer fusion;
    LayerNorm conv_norm;
    Linear conv_pointwise_in;
    Tensor depthwise_weight;
    Tensor depthwise_bias;
    LayerNorm conv_inner_norm;
    Linear conv_pointwise_out;
    LayerNorm ff2_norm;
    FeedForward ff2;
    LayerNorm out_norm;
  };

  Tensor predict_step(std::size_t token, const Tensor& previous) const;

  ConformerConfig config_;
  ParameterSet params_;
  Linear subsample_;
  Linear env_adapter_;
  std::vector<Block> blocks_;
  Tensor pred_embedding_;
  Linear pred_input_;
  Tensor pred_recurrent_;
  Linear joint_encoder_;
  Linear joint_prediction_;
  Linear joint_output_;
};

/// Fusion model and its parameter-matched self-attention baseline, built
/// from the same seed so every shared parameter starts identical.
std::pair<ConformerTransducer, ConformerTransducer> build_models(const ConformerConfig& config);

/// One Adam update on the mean transducer loss over `batch`. SpecAugment is
/// applied to each utterance when `policy` is given (time_max is clipped to
/// the utterance length).
double asr_train_step(ConformerTransducer& model, std::span<const Utterance> batch, const AdamOptions& adam,
                      const SpecAugmentPolicy* policy, std::mt19937_64& rng);

}  // namespace envasr::asr
