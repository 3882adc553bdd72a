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

#include "envasr/avbert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace envasr::avbert {

namespace {

constexpr Real kEmbeddingStd = 0.02;

}  // namespace

AvBertConfig AvBertConfig::full(std::size_t vocab_size) {
  AvBertConfig c;
  c.model_dim = 128;
  c.num_blocks = 6;
  c.heads = 4;
  c.vocab_size = vocab_size;
  return c;
}

AvBertConfig AvBertConfig::toy(std::size_t vocab_size) {
  AvBertConfig c;
  c.model_dim = 32;
  c.num_blocks = 2;
  c.heads = 4;
  c.vocab_size = vocab_size;
  return c;
}

void AvBertConfig::validate() const {
  if (model_dim == 0 || num_blocks == 0 || heads == 0) throw std::invalid_argument("avbert: dims must be positive");
  if (model_dim % heads != 0) {
    throw std::invalid_argument("avbert: model_dim " + std::to_string(model_dim) + " not divisible by " +
                                std::to_string(heads) + " heads");
  }
  if (vocab_size == 0) throw std::invalid_argument("avbert: vocab_size must be positive");
  if (audio_patch_dim == 0 || video_patch_dim == 0) throw std::invalid_argument("avbert: patch dims must be positive");
  mask.validate();
}

AvBertModel::AvBertModel(const AvBertConfig& config) : config_(config) {
  config_.validate();
  const std::size_t d = config_.model_dim;
  const std::uint64_t seed = config_.seed;
  auto embedding = [&](const std::string& name, Shape shape) {
    return params_.add(name, init_normal(std::move(shape), kEmbeddingStd, seed, name));
  };
  audio_proj_ = Linear(params_, "avbert.audio_proj", config_.audio_patch_dim, d, seed);
  video_proj_ = Linear(params_, "avbert.video_proj", config_.video_patch_dim, d, seed);
  audio_norm_gamma_ = params_.add("avbert.audio_norm.gamma", init_constant({d}, 1.0));
  audio_norm_beta_ = params_.add("avbert.audio_norm.beta", init_constant({d}, 0.0));
  video_norm_gamma_ = params_.add("avbert.video_norm.gamma", init_constant({d}, 1.0));
  video_norm_beta_ = params_.add("avbert.video_norm.beta", init_constant({d}, 0.0));
  modality_table_ = embedding("avbert.modality", {2, d});
  audio_mask_embedding_ = embedding("avbert.audio_mask", {d});
  video_mask_embedding_ = embedding("avbert.video_mask", {d});
  audio_positions_ = embedding("avbert.audio_position", {config_.max_audio_positions, d});
  video_temporal_ = embedding("avbert.video_temporal", {config_.max_video_time_steps, d});
  video_spatial_ = embedding("avbert.video_spatial", {config_.max_video_spatial, d});
  for (std::size_t i = 0; i < config_.num_blocks; ++i) {
    const std::string p = "avbert.block" + std::to_string(i);
    blocks_.push_back({LayerNorm(params_, p + ".attn_norm", d),
                       AttentionLayer(params_, p + ".attn", d, config_.heads, seed),
                       LayerNorm(params_, p + ".ff_norm", d),
                       FeedForward(params_, p + ".ff", d, config_.feed_forward_dim(), Activation::kGelu, seed)});
  }
  final_norm_ = LayerNorm(params_, "avbert.final_norm", d);
  head_ = Linear(params_, "avbert.head", d, config_.vocab_size, seed);
}

Tensor AvBertModel::embed_stream(const Tensor& patches, const Linear& proj, const Tensor& norm_gamma,
                                 const Tensor& norm_beta, const Tensor& mask_embedding, std::size_t modality,
                                 const Tensor& positions, std::span<const std::uint8_t> mask) const {
  const bool any_masked = std::any_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; });
  // Masked raw patches are zeroed before the stem so the per-channel
  // normalization statistics carry nothing about hidden content.
  Tensor raw = any_masked ? select_rows(patches, Tensor::zeros({patches.cols()}), mask) : patches;
  Tensor content = transpose(instance_norm(transpose(proj(raw)), norm_gamma, norm_beta));
  if (any_masked) content = select_rows(content, mask_embedding, mask);
  Tensor with_modality = add_bias(content, slice_rows(modality_table_, modality, modality + 1));
  return add(with_modality, positions);
}

Tensor AvBertModel::embed(const MultimodalBatch& batch, std::span<const std::uint8_t> mask) const {
  const std::size_t na = batch.audio_length(), nv = batch.video_length();
  if (na + nv == 0) throw std::invalid_argument("embed: empty batch");
  if (!mask.empty() && mask.size() != na + nv) {
    throw std::invalid_argument("embed: mask covers " + std::to_string(mask.size()) + " positions, sequence has " +
                                std::to_string(na + nv));
  }
  std::vector<std::uint8_t> none;
  auto segment = [&](std::size_t begin, std::size_t len) -> std::span<const std::uint8_t> {
    if (mask.empty()) {
      none.assign(len, 0);
      return none;
    }
    return mask.subspan(begin, len);
  };

  std::vector<Tensor> parts;
  if (na > 0) {
    if (batch.audio.patches.cols() != config_.audio_patch_dim) {
      throw std::invalid_argument("embed: audio patch dim " + std::to_string(batch.audio.patches.cols()) +
                                  " does not match config " + std::to_string(config_.audio_patch_dim));
    }
    if (na > config_.max_audio_positions) throw std::invalid_argument("embed: audio sequence exceeds position table");
    std::vector<std::size_t> index(na);
    std::iota(index.begin(), index.end(), 0);
    const std::vector<std::uint8_t> m(segment(0, na).begin(), segment(0, na).end());
    parts.push_back(embed_stream(batch.audio.patches, audio_proj_, audio_norm_gamma_, audio_norm_beta_,
                                 audio_mask_embedding_, 0, gather_rows(audio_positions_, index), m));
  }
  if (nv > 0) {
    const auto& video = *batch.video;
    if (video.patches.cols() != config_.video_patch_dim) {
      throw std::invalid_argument("embed: video patch dim " + std::to_string(video.patches.cols()) +
                                  " does not match config " + std::to_string(config_.video_patch_dim));
    }
    const auto& g = video.grid;
    if (g.size() != nv) throw std::invalid_argument("embed: video grid does not match patch count");
    if (g.time_steps > config_.max_video_time_steps || g.rows * g.cols > config_.max_video_spatial) {
      throw std::invalid_argument("embed: video grid exceeds position tables");
    }
    std::vector<std::size_t> temporal, spatial;
    temporal.reserve(nv);
    spatial.reserve(nv);
    for (std::size_t t = 0; t < g.time_steps; ++t)
      for (std::size_t s = 0; s < g.rows * g.cols; ++s) {
        temporal.push_back(t);
        spatial.push_back(s);
      }
    Tensor positions = add(gather_rows(video_temporal_, temporal), gather_rows(video_spatial_, spatial));
    const std::vector<std::uint8_t> m(segment(na, nv).begin(), segment(na, nv).end());
    parts.push_back(embed_stream(video.patches, video_proj_, video_norm_gamma_, video_norm_beta_,
                                 video_mask_embedding_, 1, positions, m));
  }
  return parts.size() == 1 ? parts.front() : concat_rows(parts);
}

EnvEmbeddings AvBertModel::encode(const Tensor& embedded, std::vector<Tensor>* attention_weights) const {
  if (embedded.ndim() != 2 || embedded.cols() != config_.model_dim || embedded.rows() == 0) {
    throw std::invalid_argument("encode: expected [L x " + std::to_string(config_.model_dim) + "], got " +
                                shape_str(embedded.shape()));
  }
  Tensor x = embedded;
  for (const auto& block : blocks_) {
    const Tensor h = block.attn_norm(x);
    x = add(x, block.attention(h, h, attention_weights));
    x = add(x, block.ff(block.ff_norm(x)));
  }
  return {final_norm_(x), false};
}

Tensor AvBertModel::logits(const EnvEmbeddings& env) const { return head_(env.vectors); }

Tensor AvBertModel::mlm_loss(const EnvEmbeddings& env, std::span<const std::size_t> labels,
                             const MaskPlan& mask) const {
  const std::size_t len = env.vectors.rows();
  if (labels.size() != len || mask.mask.size() != len) {
    throw std::invalid_argument("mlm_loss: labels/mask length does not match sequence length " + std::to_string(len));
  }
  if (mask.count() == 0) throw std::invalid_argument("mlm_loss: no masked positions");
  std::vector<std::uint8_t> ignore(len);
  for (std::size_t i = 0; i < len; ++i) ignore[i] = mask.mask[i] ? 0 : 1;
  return cross_entropy(logits(env), labels, ignore);
}

EnvEmbeddings AvBertModel::extract_env_embeddings(const features::AudioPatchSeq& audio) const {
  if (!audio.patches.defined() || audio.patches.rows() == 0) {
    throw std::invalid_argument("extract_env_embeddings: empty audio");
  }
  NoGradGuard no_grad;
  MultimodalBatch batch;
  batch.audio = audio;
  EnvEmbeddings env = encode(embed(batch, {}));
  env.frozen = true;
  return env;
}

MaskPlan draw_mask(const MultimodalBatch& batch, const MaskSchedule& schedule, std::uint64_t step,
                   std::mt19937_64& rng) {
  const MaskParams params = mask_params_at(schedule, step);
  std::vector<std::size_t> segments;
  if (batch.audio_length()) segments.push_back(batch.audio_length());
  if (batch.video_length()) segments.push_back(batch.video_length());
  MaskPlan plan = sample_segmented_mask(segments, params.width, params.prob, rng);
  if (plan.count() == 0) {
    const std::size_t center = std::uniform_int_distribution<std::size_t>(0, plan.mask.size() - 1)(rng);
    // Keep the forced span inside the center's own segment.
    std::size_t begin = 0, end = plan.mask.size();
    if (batch.audio_length() && batch.video_length()) {
      if (center < batch.audio_length()) {
        end = batch.audio_length();
      } else {
        begin = batch.audio_length();
      }
    }
    const std::size_t half = params.width / 2;
    const std::size_t lo = center >= begin + half ? center - half : begin;
    const std::size_t hi = std::min(end, center + half + 1);
    std::fill(plan.mask.begin() + static_cast<std::ptrdiff_t>(lo), plan.mask.begin() + static_cast<std::ptrdiff_t>(hi),
              1);
  }
  return plan;
}

PretrainStepResult pretrain_step(AvBertModel& model, std::span<const MultimodalBatch> batches,
                                 const AdamOptions& adam, std::uint64_t step, std::uint64_t seed) {
  if (batches.empty()) throw std::invalid_argument("pretrain_step: no batches");
  const MaskParams params = mask_params_at(model.config().mask, step);
  std::mt19937_64 rng(derive_seed(seed, "masking/" + std::to_string(step)));
  PretrainStepResult result{0.0, 0.0, params.width, params.prob, {}};

  model.parameters().zero_grad();
  std::vector<Tensor> losses;
  for (const auto& batch : batches) {
    if (batch.labels.size() != batch.length()) {
      throw std::invalid_argument("pretrain_step: label count does not match patch count");
    }
    MaskPlan mask = batch.mask.mask.empty() ? draw_mask(batch, model.config().mask, step, rng) : batch.mask;
    const EnvEmbeddings env = model.encode(model.embed(batch, mask.mask));
    losses.push_back(model.mlm_loss(env, batch.labels, mask));
    result.masks.push_back(std::move(mask));
  }
  Tensor total = losses.front();
  for (std::size_t i = 1; i < losses.size(); ++i) total = add(total, losses[i]);
  const Tensor loss = scale(total, 1.0 / static_cast<Real>(losses.size()));
  loss.backward();
  adam_step(model.parameters(), adam);
  result.loss = loss.item();
  result.perplexity = std::exp(result.loss);
  return result;
}

double masked_accuracy(const AvBertModel& model, std::span<const MultimodalBatch> batches) {
  NoGradGuard no_grad;
  std::size_t correct = 0, total = 0;
  for (const auto& batch : batches) {
    const Tensor logits = model.logits(model.encode(model.embed(batch, batch.mask.mask)));
    const std::size_t v = logits.cols();
    auto values = logits.data();
    for (std::size_t i = 0; i < batch.mask.mask.size(); ++i) {
      if (!batch.mask.mask[i]) continue;
      const auto row = values.subspan(i * v, v);
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      correct += best == batch.labels[i];
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

}  // namespace envasr::avbert
