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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "envasr/features.hpp"

// Desk-scale synthetic corpus: symbol sequences rendered as tones, with one
// of four background environments mixed into the audio and painted into a
// short video clip.
namespace envasr::corpus {

inline constexpr std::size_t kNumSymbols = 8;
inline constexpr std::size_t kNumEnvironments = 4;
inline constexpr std::size_t kMinSymbols = 3;
inline constexpr std::size_t kMaxSymbols = 10;
inline constexpr Real kToneSeconds = 0.1;
inline constexpr Real kGapSeconds = 0.03;
inline constexpr Real kEdgeSeconds = 0.05;
inline constexpr std::size_t kClipFrames = 3;
inline constexpr std::size_t kClipSize = 32;

const std::array<std::string, kNumSymbols>& symbol_words();
const std::array<Real, kNumSymbols>& symbol_frequencies();
const std::array<std::string, kNumEnvironments>& environment_names();

/// Word -> symbol index. Throws on unknown words.
std::size_t symbol_index(const std::string& word);
std::string labels_to_text(const std::vector<std::size_t>& labels);
std::vector<std::size_t> text_to_labels(const std::string& text);

struct SyntheticUtterance {
  std::string id;
  features::AudioWave audio;
  std::vector<std::size_t> labels;
  std::size_t environment = 0;
  features::VideoClip clip;
};

struct SyntheticCorpus {
  std::vector<SyntheticUtterance> utterances;
  std::uint64_t seed = 0;
};

/// Pure tone for one symbol, without noise.
std::vector<Real> render_tone(std::size_t symbol);

SyntheticCorpus generate_synthetic_corpus(std::size_t n_utterances, std::uint64_t seed);

/// Writes wav/<id>.wav, clips/<id>.clip, manifest.tsv and environments.tsv.
void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

struct ManifestEntry {
  std::string id;
  std::filesystem::path audio_path;
  std::vector<std::string> words;
};

/// `audio_path<TAB>words` per line; relative paths resolve against the
/// manifest's directory. The id is the audio file stem.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

struct EnvironmentEntry {
  std::size_t environment = 0;
  std::filesystem::path clip_path;
};

/// Reads environments.tsv (`id<TAB>environment<TAB>clip_path`) next to a
/// manifest, keyed by utterance id.
std::vector<std::pair<std::string, EnvironmentEntry>> read_environments(const std::filesystem::path& path);

}  // namespace envasr::corpus
