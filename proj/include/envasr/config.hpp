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
#include <filesystem>
#include <string>
#include <string_view>

#include "envasr/asr.hpp"
#include "envasr/avbert.hpp"
#include "envasr/params.hpp"
#include "envasr/specaugment.hpp"

// Run configuration: flat `section.key = value` lines, `#` comments.
// Presets (`avbert.preset`, `asr.preset`) are applied before any explicit
// key, whatever their position in the file.
namespace envasr {

enum class Stage { kPretrain, kTrainAsr, kEval, kTokenize };

std::string_view stage_name(Stage stage);
Stage parse_stage(std::string_view name);

struct PathsConfig {
  std::filesystem::path data_dir = "data";
  /// Defaults to <data_dir>/manifest.tsv when empty.
  std::filesystem::path train_manifest;
  /// Defaults to the training manifest when empty.
  std::filesystem::path eval_manifest;
  std::filesystem::path codebook_dir = "codebooks";
  std::filesystem::path checkpoint_dir = "checkpoints";
  /// AV-BERT checkpoint used by train_asr / eval; defaults to
  /// <checkpoint_dir>/avbert.ckpt.
  std::filesystem::path pretrain_checkpoint;
  /// Hypotheses and WER report; defaults to <checkpoint_dir>.
  std::filesystem::path output_dir;
};

struct TrainConfig {
  std::size_t batch_size = 8;
  std::uint64_t max_steps = 1000;
  std::uint64_t log_every = 1;
  std::uint64_t checkpoint_every = 1000;
  /// Validation interval in steps; 0 disables validation.
  std::uint64_t eval_every = 0;
  /// Stop after this many validations without improvement; 0 disables.
  std::uint64_t patience = 0;
  /// ASR only: stop once validation WER is at or below this; negative
  /// disables.
  Real target_wer = -1.0;
  bool resume = false;
  bool specaugment = true;
};

struct TokenizeConfig {
  std::size_t audio_k = 64;
  std::size_t video_k = 128;
  std::size_t max_iters = 50;
  std::size_t sample_cap = 200000;
};

struct VideoConfig {
  std::size_t frame_size = 32;
  Real frame_rate = 6.0;
};

struct RunConfig {
  Stage stage = Stage::kPretrain;
  std::uint64_t seed = 0;
  PathsConfig paths;
  AdamOptions optim;
  TrainConfig train;
  TokenizeConfig tokenize;
  VideoConfig video;
  std::string avbert_preset = "toy";
  avbert::AvBertConfig avbert = avbert::AvBertConfig::toy(24);
  std::string asr_preset = "toy";
  asr::ConformerConfig asr = asr::ConformerConfig::toy(32, 8);
  SpecAugmentPolicy specaug;

  std::filesystem::path train_manifest() const;
  std::filesystem::path eval_manifest() const;
  std::filesystem::path pretrain_checkpoint() const;
  std::filesystem::path output_dir() const;
};

/// Parses config text. Relative paths are resolved against `base_dir`.
/// Throws std::invalid_argument naming the line on parse errors, unknown
/// keys, bad values and failed validation.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Every field, one key per line, in a stable order.
std::string format_config(const RunConfig& config);
void write_config(const std::filesystem::path& path, const RunConfig& config);

void validate_config(const RunConfig& config);

}  // namespace envasr
