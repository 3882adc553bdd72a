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

#include "envasr/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "envasr/params.hpp"
#include "envasr/serialize.hpp"

namespace envasr::corpus {

namespace fs = std::filesystem;

const std::array<std::string, kNumSymbols>& symbol_words() {
  static const std::array<std::string, kNumSymbols> words = {"zero", "one",  "two", "three",
                                                             "four", "five", "six", "seven"};
  return words;
}

// 300 Hz apart so a 100 ms window (10 Hz bins) separates them cleanly.
const std::array<Real, kNumSymbols>& symbol_frequencies() {
  static const std::array<Real, kNumSymbols> freqs = {400, 700, 1000, 1300, 1600, 1900, 2200, 2500};
  return freqs;
}

const std::array<std::string, kNumEnvironments>& environment_names() {
  static const std::array<std::string, kNumEnvironments> names = {"none", "white", "hum", "crackle"};
  return names;
}

std::size_t symbol_index(const std::string& word) {
  const auto& words = symbol_words();
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i] == word) return i;
  }
  throw std::invalid_argument("unknown symbol word '" + word + "'");
}

std::string labels_to_text(const std::vector<std::size_t>& labels) {
  std::string out;
  for (std::size_t y : labels) {
    if (y >= kNumSymbols) throw std::invalid_argument("label " + std::to_string(y) + " out of range");
    if (!out.empty()) out += ' ';
    out += symbol_words()[y];
  }
  return out;
}

std::vector<std::size_t> text_to_labels(const std::string& text) {
  std::vector<std::size_t> out;
  std::istringstream in(text);
  for (std::string w; in >> w;) out.push_back(symbol_index(w));
  return out;
}

std::vector<Real> render_tone(std::size_t symbol) {
  const auto n = static_cast<std::size_t>(kToneSeconds * features::kSampleRate);
  const Real f = symbol_frequencies().at(symbol);
  std::vector<Real> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Short linear fades keep onsets from splattering across bands.
    const Real fade = std::min<Real>({1.0, static_cast<Real>(i) / 80.0, static_cast<Real>(n - 1 - i) / 80.0});
    out[i] = 0.5 * fade * std::sin(2.0 * std::numbers::pi * f * static_cast<Real>(i) / features::kSampleRate);
  }
  return out;
}

namespace {

const std::array<std::array<Real, 3>, kNumEnvironments> kClipColors = {{
    {0.1, 0.1, 0.1},
    {0.9, 0.9, 0.9},
    {0.8, 0.3, 0.2},
    {0.2, 0.4, 0.8},
}};

void add_noise(std::vector<Real>& audio, std::size_t environment, std::mt19937_64& rng) {
  switch (environment) {
    case 0:
      break;
    case 1: {
      std::normal_distribution<Real> g(0.0, 0.03);
      for (Real& s : audio) s += g(rng);
      break;
    }
    case 2: {
      const Real phase = std::uniform_real_distribution<Real>(0.0, 2.0 * std::numbers::pi)(rng);
      for (std::size_t i = 0; i < audio.size(); ++i) {
        const Real t = static_cast<Real>(i) / features::kSampleRate;
        audio[i] += 0.08 * std::sin(2.0 * std::numbers::pi * 60.0 * t + phase) +
                    0.04 * std::sin(2.0 * std::numbers::pi * 120.0 * t + phase);
      }
      break;
    }
    case 3: {
      std::bernoulli_distribution pop(0.002);
      std::uniform_real_distribution<Real> amp(-0.4, 0.4);
      for (Real& s : audio) {
        if (pop(rng)) s += amp(rng);
      }
      break;
    }
    default:
      throw std::invalid_argument("unknown environment id " + std::to_string(environment));
  }
}

features::VideoClip render_clip(std::size_t environment, std::mt19937_64& rng) {
  std::uniform_real_distribution<Real> jitter(-0.05, 0.05);
  std::vector<Real> px(kClipFrames * kClipSize * kClipSize * 3);
  const auto& color = kClipColors.at(environment);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = std::clamp<Real>(color[i % 3] + jitter(rng), 0.0, 1.0);
  return {Tensor::from({kClipFrames, kClipSize, kClipSize, 3}, std::move(px)), features::kVideoFrameRate};
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(std::size_t n_utterances, std::uint64_t seed) {
  if (n_utterances == 0) throw std::invalid_argument("generate_synthetic_corpus: need at least one utterance");
  SyntheticCorpus corpus;
  corpus.seed = seed;
  std::mt19937_64 rng(derive_seed(seed, "corpus"));
  const auto edge = static_cast<std::size_t>(kEdgeSeconds * features::kSampleRate);
  const auto gap = static_cast<std::size_t>(kGapSeconds * features::kSampleRate);
  for (std::size_t n = 0; n < n_utterances; ++n) {
    SyntheticUtterance utt;
    char id[32];
    std::snprintf(id, sizeof(id), "utt%04zu", n);
    utt.id = id;
    const auto len = std::uniform_int_distribution<std::size_t>(kMinSymbols, kMaxSymbols)(rng);
    std::uniform_int_distribution<std::size_t> sym(0, kNumSymbols - 1);
    for (std::size_t i = 0; i < len; ++i) utt.labels.push_back(sym(rng));
    utt.environment = std::uniform_int_distribution<std::size_t>(0, kNumEnvironments - 1)(rng);

    std::vector<Real>& audio = utt.audio.samples;
    audio.assign(edge, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
      if (i > 0) audio.insert(audio.end(), gap, 0.0);
      const auto tone = render_tone(utt.labels[i]);
      audio.insert(audio.end(), tone.begin(), tone.end());
    }
    audio.insert(audio.end(), edge, 0.0);
    add_noise(audio, utt.environment, rng);
    utt.clip = render_clip(utt.environment, rng);
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

void write_corpus(const SyntheticCorpus& corpus, const fs::path& dir) {
  fs::create_directories(dir / "wav");
  fs::create_directories(dir / "clips");
  std::vector<ManifestEntry> entries;
  std::ostringstream envs;
  for (const auto& utt : corpus.utterances) {
    const fs::path wav = fs::path("wav") / (utt.id + ".wav");
    const fs::path clip = fs::path("clips") / (utt.id + ".clip");
    features::write_wav(dir / wav, utt.audio);
    write_tensor_file(dir / clip, utt.clip.pixels);
    std::vector<std::string> words;
    for (std::size_t y : utt.labels) words.push_back(symbol_words()[y]);
    entries.push_back({utt.id, wav, std::move(words)});
    envs << utt.id << '\t' << utt.environment << '\t' << clip.generic_string() << '\n';
  }
  write_manifest(dir / "manifest.tsv", entries);
  write_file(dir / "environments.tsv", envs.str());
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected audio_path<TAB>words");
    }
    ManifestEntry e;
    e.audio_path = line.substr(0, tab);
    if (e.audio_path.is_relative()) e.audio_path = path.parent_path() / e.audio_path;
    e.id = e.audio_path.stem().string();
    std::istringstream words(line.substr(tab + 1));
    for (std::string w; words >> w;) e.words.push_back(w);
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  std::ostringstream out;
  for (const auto& e : entries) {
    out << e.audio_path.generic_string() << '\t';
    for (std::size_t i = 0; i < e.words.size(); ++i) out << (i ? " " : "") << e.words[i];
    out << '\n';
  }
  write_file(path, out.str());
}

std::vector<std::pair<std::string, EnvironmentEntry>> read_environments(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::pair<std::string, EnvironmentEntry>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id, clip;
    EnvironmentEntry e;
    if (!(fields >> id >> e.environment >> clip)) throw std::runtime_error("malformed line in " + path.string());
    e.clip_path = fs::path(clip).is_relative() ? path.parent_path() / clip : fs::path(clip);
    out.emplace_back(id, std::move(e));
  }
  return out;
}

}  // namespace envasr::corpus
