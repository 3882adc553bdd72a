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

#include "envasr/asr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "envasr/ops.hpp"
#include "envasr/rnnt.hpp"

namespace envasr::asr {

std::string_view fusion_mode_name(FusionMode mode) {
  return mode == FusionMode::kCrossAttention ? "cross_attention" : "self_attention_baseline";
}

FusionMode parse_fusion_mode(std::string_view name) {
  if (name == "cross_attention") return FusionMode::kCrossAttention;
  if (name == "self_attention_baseline") return FusionMode::kSelfAttentionBaseline;
  throw std::invalid_argument("unknown fusion mode '" + std::string(name) + "'");
}

ConformerConfig ConformerConfig::full(std::size_t env_dim, std::size_t vocab_size) {
  ConformerConfig c;
  c.model_dim = 1024;
  c.num_blocks = 24;
  c.heads = 4;
  c.conv_kernel = 31;
  c.env_dim = env_dim;
  c.vocab_size = vocab_size;
  return c;
}

ConformerConfig ConformerConfig::toy(std::size_t env_dim, std::size_t vocab_size) {
  ConformerConfig c;
  c.model_dim = 64;
  c.num_blocks = 2;
  c.heads = 4;
  c.conv_kernel = 7;
  c.env_dim = env_dim;
  c.vocab_size = vocab_size;
  return c;
}

void ConformerConfig::validate() const {
  if (model_dim == 0 || num_blocks == 0 || heads == 0 || input_dim == 0 || env_dim == 0 || vocab_size == 0) {
    throw std::invalid_argument("conformer: dims must be positive");
  }
  if (model_dim % heads != 0) {
    throw std::invalid_argument("conformer: model_dim " + std::to_string(model_dim) + " not divisible by " +
                                std::to_string(heads) + " heads");
  }
  if (conv_kernel % 2 == 0) throw std::invalid_argument("conformer: conv_kernel must be odd");
  if (subsample_kernel == 0 || subsample_stride == 0) throw std::invalid_argument("conformer: bad subsampling");
}

ConformerTransducer::ConformerTransducer(const ConformerConfig& config) : config_(config) {
  config_.validate();
  const std::size_t d = config_.model_dim;
  const std::uint64_t seed = config_.seed;
  subsample_ = Linear(params_, "asr.subsample", config_.subsample_kernel * config_.input_dim, d, seed);
  env_adapter_ = Linear(params_, "asr.env_adapter", config_.env_dim, d, seed);
  for (std::size_t i = 0; i < config_.num_blocks; ++i) {
    const std::string p = "asr.block" + std::to_string(i);
    Block b;
    b.ff1_norm = LayerNorm(params_, p + ".ff1_norm", d);
    b.ff1 = FeedForward(params_, p + ".ff1", d, config_.ff_mult * d, Activation::kSilu, seed);
    b.attn_norm = LayerNorm(params_, p + ".attn_norm", d);
    b.attention = AttentionLayer(params_, p + ".attn", d, config_.heads, seed);
    b.fusion_norm = LayerNorm(params_, p + ".fusion_norm", d);
    b.fusion = AttentionLayer(params_, p + ".fusion", d, config_.heads, seed);
    b.conv_norm = LayerNorm(params_, p + ".conv_norm", d);
    b.conv_pointwise_in = Linear(params_, p + ".conv_pw_in", d, 2 * d, seed);
    const std::string dw = p + ".conv_depthwise.weight";
    b.depthwise_weight = params_.add(
        dw, init_normal({config_.conv_kernel, d}, 1.0 / std::sqrt(static_cast<Real>(config_.conv_kernel)), seed, dw));
    b.depthwise_bias = params_.add(p + ".conv_depthwise.bias", init_constant({d}, 0.0));
    b.conv_inner_norm = LayerNorm(params_, p + ".conv_inner_norm", d);
    b.conv_pointwise_out = Linear(params_, p + ".conv_pw_out", d, d, seed);
    b.ff2_norm = LayerNorm(params_, p + ".ff2_norm", d);
    b.ff2 = FeedForward(params_, p + ".ff2", d, config_.ff_mult * d, Activation::kSilu, seed);
    b.out_norm = LayerNorm(params_, p + ".out_norm", d);
    blocks_.push_back(std::move(b));
  }
  const std::size_t classes = config_.vocab_size + 1;
  pred_embedding_ = params_.add("asr.pred.embedding", init_normal({classes, d}, 0.1, seed, "asr.pred.embedding"));
  pred_input_ = Linear(params_, "asr.pred.input", d, d, seed);
  pred_recurrent_ = params_.add(
      "asr.pred.recurrent", init_normal({d, d}, 0.5 / std::sqrt(static_cast<Real>(d)), seed, "asr.pred.recurrent"));
  joint_encoder_ = Linear(params_, "asr.joint.encoder", d, d, seed);
  joint_prediction_ = Linear(params_, "asr.joint.prediction", d, d, seed, false);
  joint_output_ = Linear(params_, "asr.joint.output", d, classes, seed);
}

Tensor ConformerTransducer::conv_subsample(const Tensor& features) const {
  if (features.ndim() != 2 || features.cols() != config_.input_dim) {
    throw std::invalid_argument("conv_subsample: expected [T x " + std::to_string(config_.input_dim) + "], got " +
                                shape_str(features.shape()));
  }
  if (features.rows() < config_.subsample_kernel) {
    throw std::invalid_argument("conv_subsample: need at least " + std::to_string(config_.subsample_kernel) +
                                " frames, got " + std::to_string(features.rows()));
  }
  return subsample_(unfold_frames(features, config_.subsample_kernel, config_.subsample_stride));
}

Tensor ConformerTransducer::project_env(const Tensor& env) const {
  if (env.ndim() != 2 || env.cols() != config_.env_dim || env.rows() == 0) {
    throw std::invalid_argument("project_env: expected [L x " + std::to_string(config_.env_dim) + "], got " +
                                shape_str(env.shape()));
  }
  return env_adapter_(env);
}

Tensor ConformerTransducer::fusion_attention(std::size_t index, const Tensor& x, const Tensor& env_projected,
                                             std::vector<Tensor>* weights) const {
  const Block& b = blocks_.at(index);
  const Tensor h = b.fusion_norm(x);
  if (config_.fusion_mode == FusionMode::kSelfAttentionBaseline) return b.fusion(h, h, weights);
  if (!env_projected.defined()) {
    throw std::invalid_argument("fusion_attention: cross-attention mode requires environment embeddings");
  }
  return b.fusion(h, env_projected, weights);
}

Tensor ConformerTransducer::conformer_block(std::size_t index, const Tensor& x, const Tensor& env_projected) const {
  const Block& b = blocks_.at(index);
  Tensor y = add(x, scale(b.ff1(b.ff1_norm(x)), 0.5));
  const Tensor h = b.attn_norm(y);
  y = add(y, b.attention(h, h));
  y = add(y, fusion_attention(index, y, env_projected));
  Tensor c = glu(b.conv_pointwise_in(b.conv_norm(y)));
  c = depthwise_conv1d(c, b.depthwise_weight, b.depthwise_bias);
  c = b.conv_pointwise_out(silu(b.conv_inner_norm(c)));
  y = add(y, c);
  y = add(y, scale(b.ff2(b.ff2_norm(y)), 0.5));
  return b.out_norm(y);
}

Tensor ConformerTransducer::encode(const Tensor& features, const avbert::EnvEmbeddings* env) const {
  Tensor env_projected;
  if (config_.fusion_mode == FusionMode::kCrossAttention) {
    if (!env) throw std::invalid_argument("encode: cross-attention mode requires environment embeddings");
    // Frozen embeddings enter as constants; no gradient reaches them.
    env_projected = project_env(env->frozen ? env->vectors.detach() : env->vectors);
  }
  Tensor x = conv_subsample(features);
  for (std::size_t i = 0; i < blocks_.size(); ++i) x = conformer_block(i, x, env_projected);
  return x;
}

Tensor ConformerTransducer::predict_step(std::size_t token, const Tensor& previous) const {
  const std::size_t idx[] = {token};
  Tensor pre = pred_input_(gather_rows(pred_embedding_, idx));
  if (previous.defined()) pre = add(pre, matmul(previous, pred_recurrent_));
  return tanh(pre);
}

Tensor ConformerTransducer::prediction(std::span<const std::size_t> labels) const {
  std::vector<Tensor> states;
  states.reserve(labels.size() + 1);
  Tensor state = predict_step(config_.blank(), Tensor());
  states.push_back(state);
  for (std::size_t y : labels) {
    if (y >= config_.vocab_size) throw std::invalid_argument("prediction: label " + std::to_string(y) + " out of range");
    state = predict_step(y, state);
    states.push_back(state);
  }
  return states.size() == 1 ? states.front() : concat_rows(states);
}

Tensor ConformerTransducer::joint_log_probs(const Tensor& encoded, const Tensor& predicted) const {
  const Tensor hidden = tanh(outer_add_rows(joint_encoder_(encoded), joint_prediction_(predicted)));
  return log_softmax(joint_output_(hidden));
}

Tensor ConformerTransducer::loss(const Tensor& features, std::span<const std::size_t> labels,
                                 const avbert::EnvEmbeddings* env) const {
  const Tensor encoded = encode(features, env);
  const Tensor log_probs = joint_log_probs(encoded, prediction(labels));
  return rnnt_loss(log_probs, encoded.rows(), labels, config_.blank());
}

Tensor ConformerTransducer::loss(const Utterance& utt) const {
  return loss(utt.features.patches, utt.labels, utt.env ? &*utt.env : nullptr);
}

std::vector<std::size_t> ConformerTransducer::greedy_decode(const Tensor& features, const avbert::EnvEmbeddings* env,
                                                            std::size_t max_symbols_per_frame) const {
  NoGradGuard no_grad;
  const Tensor encoded = joint_encoder_(encode(features, env));
  std::vector<std::size_t> out;
  Tensor state = predict_step(config_.blank(), Tensor());
  Tensor pred = joint_prediction_(state);
  for (std::size_t t = 0; t < encoded.rows(); ++t) {
    const Tensor frame = slice_rows(encoded, t, t + 1);
    for (std::size_t n = 0; n < max_symbols_per_frame; ++n) {
      const Tensor logits = joint_output_(tanh(add(frame, pred)));
      auto row = logits.data();
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      if (best == config_.blank()) break;
      out.push_back(best);
      state = predict_step(best, state);
      pred = joint_prediction_(state);
    }
  }
  return out;
}

std::vector<std::size_t> ConformerTransducer::greedy_decode(const Utterance& utt,
                                                            std::size_t max_symbols_per_frame) const {
  return greedy_decode(utt.features.patches, utt.env ? &*utt.env : nullptr, max_symbols_per_frame);
}

std::pair<ConformerTransducer, ConformerTransducer> build_models(const ConformerConfig& config) {
  ConformerConfig fusion = config;
  fusion.fusion_mode = FusionMode::kCrossAttention;
  ConformerConfig baseline = config;
  baseline.fusion_mode = FusionMode::kSelfAttentionBaseline;
  return {ConformerTransducer(fusion), ConformerTransducer(baseline)};
}

double asr_train_step(ConformerTransducer& model, std::span<const Utterance> batch, const AdamOptions& adam,
                      const SpecAugmentPolicy* policy, std::mt19937_64& rng) {
  if (batch.empty()) throw std::invalid_argument("asr_train_step: empty batch");
  model.parameters().zero_grad();
  Tensor total;
  for (const auto& utt : batch) {
    if (utt.labels.empty()) throw std::invalid_argument("asr_train_step: utterance without labels");
    Tensor feats = utt.features.patches;
    if (policy) {
      SpecAugmentPolicy p = *policy;
      p.time_max = std::min(p.time_max, feats.rows());
      p.freq_max = std::min(p.freq_max, feats.cols());
      feats = specaugment(feats, p, rng);
    }
    const Tensor l = model.loss(feats, utt.labels, utt.env ? &*utt.env : nullptr);
    total = total.defined() ? add(total, l) : l;
  }
  const Tensor loss = scale(total, 1.0 / static_cast<Real>(batch.size()));
  loss.backward();
  adam_step(model.parameters(), adam);
  return loss.item();
}

}  // namespace envasr::asr
