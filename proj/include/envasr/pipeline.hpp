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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "envasr/asr.hpp"
#include "envasr/avbert.hpp"
#include "envasr/config.hpp"
#include "envasr/features.hpp"
#include "envasr/vq.hpp"
#include "envasr/wer.hpp"

// Stage runners. Each is a deterministic function of (config, input files)
// and writes one log line per step to `log`.
namespace envasr::pipeline {

struct CorpusUtterance {
  std::string id;
  std::vector<std::string> words;
  /// Stacked LFBE patches before whitening.
  features::AudioPatchSeq audio;
  std::optional<features::VideoPatchSeq> video;
  std::size_t environment = 0;
};

/// Loads every manifest entry; clips come from environments.tsv next to the
/// manifest when `with_video` is set.
std::vector<CorpusUtterance> load_corpus(const std::filesystem::path& manifest, const VideoConfig& video,
                                         bool with_video);

/// Crop/resize, frame-rate reduction, truncation and tubelet extraction.
features::VideoPatchSeq prepare_video(const features::VideoClip& clip, const VideoConfig& video);

struct Assets {
  features::Whitener whitener;
  vq::Codebook audio;
  vq::Codebook video;

  std::size_t vocab_size() const { return vq::unified_vocab_size(audio, video); }
};

/// Fits the whitener, trains both codebooks and writes them with the token
/// manifest (tokens.tsv) and vocab.txt into the codebook dir.
Assets run_tokenize(const RunConfig& config, std::ostream& log);
Assets load_assets(const RunConfig& config);
bool assets_exist(const RunConfig& config);

/// Token ids for one utterance, audio tokens first.
std::vector<std::size_t> tokenize_utterance(const Assets& assets, const CorpusUtterance& utt);

struct PretrainResult {
  std::uint64_t final_step = 0;
  double final_loss = 0.0;
  bool stopped_early = false;
  std::filesystem::path checkpoint;
};

/// Codebooks are trained first if missing. Writes <checkpoint_dir>/avbert.ckpt.
PretrainResult run_pretraining(const RunConfig& config, std::ostream& log);

/// Rebuilds an AV-BERT model from a pretraining checkpoint.
avbert::AvBertModel load_avbert(const std::filesystem::path& checkpoint);

struct AsrTrainResult {
  std::uint64_t final_step = 0;
  double final_loss = 0.0;
  std::optional<double> last_wer;
  std::optional<std::uint64_t> avbert_hash_before;
  std::optional<std::uint64_t> avbert_hash_after;
  std::filesystem::path checkpoint;
};

/// Writes <checkpoint_dir>/asr.ckpt. Cross-attention mode needs the AV-BERT
/// checkpoint; its parameter hash is checked unchanged after training.
AsrTrainResult run_asr_training(const RunConfig& config, std::ostream& log);

struct EvalResult {
  EditCounts counts;
  std::vector<std::string> hypotheses;
};

/// Pooled edit counts over utterance pairs.
EditCounts corpus_counts(std::span<const std::vector<std::string>> references,
                         std::span<const std::vector<std::string>> hypotheses);

/// Greedy-decodes the eval manifest, writes hypotheses.txt and wer.txt to
/// the output dir. Throws on an empty eval set.
EvalResult run_eval(const RunConfig& config, const std::filesystem::path& asr_checkpoint, std::ostream& log);

}  // namespace envasr::pipeline
