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

#include "envasr/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "envasr/serialize.hpp"
#include "envasr/vq.hpp"

namespace envasr {

namespace fs = std::filesystem;

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kPretrain: return "pretrain";
    case Stage::kTrainAsr: return "train_asr";
    case Stage::kEval: return "eval";
    case Stage::kTokenize: return "tokenize";
  }
  return "?";
}

Stage parse_stage(std::string_view name) {
  for (Stage s : {Stage::kPretrain, Stage::kTrainAsr, Stage::kEval, Stage::kTokenize}) {
    if (stage_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown stage '" + std::string(name) + "'");
}

fs::path RunConfig::train_manifest() const {
  return paths.train_manifest.empty() ? paths.data_dir / "manifest.tsv" : paths.train_manifest;
}

fs::path RunConfig::eval_manifest() const {
  return paths.eval_manifest.empty() ? train_manifest() : paths.eval_manifest;
}

fs::path RunConfig::pretrain_checkpoint() const {
  return paths.pretrain_checkpoint.empty() ? paths.checkpoint_dir / "avbert.ckpt" : paths.pretrain_checkpoint;
}

fs::path RunConfig::output_dir() const { return paths.output_dir.empty() ? paths.checkpoint_dir : paths.output_dir; }

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t to_uint(const std::string& v) {
  // Parse signed first so "-3" is reported as negative rather than wrapping.
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected an integer, got '" + v + "'");
  if (x < 0) throw std::invalid_argument("value must be non-negative, got " + v);
  return static_cast<std::uint64_t>(x);
}

Real to_real(const std::string& v) {
  std::size_t used = 0;
  Real x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw std::invalid_argument("expected a number, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

std::string real_str(Real x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct Field {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

template <typename T>
Field uint_field(std::string key, T& ref) {
  return {std::move(key), [&ref] { return std::to_string(ref); }, [&ref](const std::string& v) { ref = static_cast<T>(to_uint(v)); }};
}

Field real_field(std::string key, Real& ref) {
  return {std::move(key), [&ref] { return real_str(ref); }, [&ref](const std::string& v) { ref = to_real(v); }};
}

Field bool_field(std::string key, bool& ref) {
  return {std::move(key), [&ref] { return std::string(ref ? "true" : "false"); },
          [&ref](const std::string& v) { ref = to_bool(v); }};
}

Field path_field(std::string key, fs::path& ref, const fs::path& base) {
  return {std::move(key), [&ref] { return ref.generic_string(); },
          [&ref, base](const std::string& v) {
            ref = v;
            if (!v.empty() && ref.is_relative() && !base.empty()) ref = base / ref;
          }};
}

std::vector<Field> fields(RunConfig& c, const fs::path& base) {
  std::vector<Field> f;
  f.push_back({"stage", [&c] { return std::string(stage_name(c.stage)); },
               [&c](const std::string& v) { c.stage = parse_stage(v); }});
  f.push_back(uint_field("seed", c.seed));
  f.push_back(path_field("paths.data_dir", c.paths.data_dir, base));
  f.push_back(path_field("paths.train_manifest", c.paths.train_manifest, base));
  f.push_back(path_field("paths.eval_manifest", c.paths.eval_manifest, base));
  f.push_back(path_field("paths.codebook_dir", c.paths.codebook_dir, base));
  f.push_back(path_field("paths.checkpoint_dir", c.paths.checkpoint_dir, base));
  f.push_back(path_field("paths.pretrain_checkpoint", c.paths.pretrain_checkpoint, base));
  f.push_back(path_field("paths.output_dir", c.paths.output_dir, base));
  f.push_back(real_field("optim.lr", c.optim.lr));
  f.push_back(real_field("optim.beta1", c.optim.beta1));
  f.push_back(real_field("optim.beta2", c.optim.beta2));
  f.push_back(real_field("optim.eps", c.optim.eps));
  f.push_back(uint_field("train.batch_size", c.train.batch_size));
  f.push_back(uint_field("train.max_steps", c.train.max_steps));
  f.push_back(uint_field("train.log_every", c.train.log_every));
  f.push_back(uint_field("train.checkpoint_every", c.train.checkpoint_every));
  f.push_back(uint_field("train.eval_every", c.train.eval_every));
  f.push_back(uint_field("train.patience", c.train.patience));
  f.push_back(real_field("train.target_wer", c.train.target_wer));
  f.push_back(bool_field("train.resume", c.train.resume));
  f.push_back(bool_field("train.specaugment", c.train.specaugment));
  f.push_back(uint_field("tokenize.audio_k", c.tokenize.audio_k));
  f.push_back(uint_field("tokenize.video_k", c.tokenize.video_k));
  f.push_back(uint_field("tokenize.max_iters", c.tokenize.max_iters));
  f.push_back(uint_field("tokenize.sample_cap", c.tokenize.sample_cap));
  f.push_back(uint_field("video.frame_size", c.video.frame_size));
  f.push_back(real_field("video.frame_rate", c.video.frame_rate));
  f.push_back({"avbert.preset", [&c] { return c.avbert_preset; }, [](const std::string&) {}});
  f.push_back(uint_field("avbert.model_dim", c.avbert.model_dim));
  f.push_back(uint_field("avbert.num_blocks", c.avbert.num_blocks));
  f.push_back(uint_field("avbert.heads", c.avbert.heads));
  f.push_back(uint_field("avbert.ff_dim", c.avbert.ff_dim));
  f.push_back(uint_field("avbert.vocab_size", c.avbert.vocab_size));
  f.push_back(uint_field("avbert.max_audio_positions", c.avbert.max_audio_positions));
  f.push_back(uint_field("avbert.max_video_time_steps", c.avbert.max_video_time_steps));
  f.push_back(uint_field("avbert.max_video_spatial", c.avbert.max_video_spatial));
  f.push_back(real_field("mask.p_init", c.avbert.mask.p_init));
  f.push_back(real_field("mask.p_final", c.avbert.mask.p_final));
  f.push_back(uint_field("mask.width_init", c.avbert.mask.width_init));
  f.push_back(uint_field("mask.width_final", c.avbert.mask.width_final));
  f.push_back(uint_field("mask.width_step", c.avbert.mask.width_step));
  f.push_back(uint_field("mask.stage_steps", c.avbert.mask.stage_steps));
  f.push_back(real_field("mask.ramp_rate", c.avbert.mask.ramp_rate));
  f.push_back({"asr.preset", [&c] { return c.asr_preset; }, [](const std::string&) {}});
  f.push_back(uint_field("asr.model_dim", c.asr.model_dim));
  f.push_back(uint_field("asr.num_blocks", c.asr.num_blocks));
  f.push_back(uint_field("asr.heads", c.asr.heads));
  f.push_back(uint_field("asr.ff_mult", c.asr.ff_mult));
  f.push_back(uint_field("asr.conv_kernel", c.asr.conv_kernel));
  f.push_back(uint_field("asr.subsample_kernel", c.asr.subsample_kernel));
  f.push_back(uint_field("asr.subsample_stride", c.asr.subsample_stride));
  f.push_back(uint_field("asr.env_dim", c.asr.env_dim));
  f.push_back(uint_field("asr.vocab_size", c.asr.vocab_size));
  f.push_back({"asr.fusion_mode", [&c] { return std::string(asr::fusion_mode_name(c.asr.fusion_mode)); },
               [&c](const std::string& v) { c.asr.fusion_mode = asr::parse_fusion_mode(v); }});
  f.push_back(uint_field("specaug.freq_masks", c.specaug.freq_masks));
  f.push_back(uint_field("specaug.freq_max", c.specaug.freq_max));
  f.push_back(uint_field("specaug.time_masks", c.specaug.time_masks));
  f.push_back(uint_field("specaug.time_max", c.specaug.time_max));
  return f;
}

void apply_avbert_preset(RunConfig& c, const std::string& name) {
  if (name == "toy") {
    c.avbert = avbert::AvBertConfig::toy(c.avbert.vocab_size);
  } else if (name == "full") {
    c.avbert = avbert::AvBertConfig::full(c.avbert.vocab_size);
    c.tokenize.audio_k = vq::kFullAudioCenters;
    c.tokenize.video_k = vq::kFullVideoCenters;
    c.video.frame_size = features::kVideoFrameSize;
  } else {
    throw std::invalid_argument("unknown avbert preset '" + name + "'");
  }
  c.avbert_preset = name;
}

void apply_asr_preset(RunConfig& c, const std::string& name) {
  const auto mode = c.asr.fusion_mode;
  if (name == "toy") {
    c.asr = asr::ConformerConfig::toy(c.asr.env_dim, c.asr.vocab_size);
  } else if (name == "full") {
    c.asr = asr::ConformerConfig::full(c.asr.env_dim, c.asr.vocab_size);
  } else {
    throw std::invalid_argument("unknown asr preset '" + name + "'");
  }
  c.asr.fusion_mode = mode;
  c.asr_preset = name;
}

}  // namespace

RunConfig parse_config(std::string_view text, const fs::path& base_dir) {
  struct Entry {
    std::string value;
    std::size_t line;
  };
  std::map<std::string, Entry> entries;
  std::vector<std::string> order;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    if (entries.count(key)) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    entries[key] = {trim(line.substr(eq + 1)), line_no};
    order.push_back(std::move(key));
  }

  RunConfig c;
  auto fail = [](const std::string& key, std::size_t line, const std::exception& e) {
    throw std::invalid_argument("config line " + std::to_string(line) + " (" + key + "): " + e.what());
  };
  for (const char* key : {"avbert.preset", "asr.preset"}) {
    auto it = entries.find(key);
    if (it == entries.end()) continue;
    try {
      // The preset needs vocab/env dims that may be set explicitly later;
      // those keys overwrite the preset values below either way.
      if (std::string(key) == "avbert.preset") {
        apply_avbert_preset(c, it->second.value);
      } else {
        apply_asr_preset(c, it->second.value);
      }
    } catch (const std::exception& e) {
      fail(key, it->second.line, e);
    }
  }

  auto table = fields(c, base_dir);
  std::map<std::string, const Field*> by_key;
  for (const auto& f : table) by_key[f.key] = &f;
  for (const auto& key : order) {
    const Entry& e = entries.at(key);
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      throw std::invalid_argument("config line " + std::to_string(e.line) + ": unknown key '" + key + "'");
    }
    try {
      it->second->set(e.value);
    } catch (const std::exception& ex) {
      fail(key, e.line, ex);
    }
  }
  validate_config(c);
  return c;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw std::invalid_argument("config file not found: " + path.string());
  return parse_config(read_file(path), path.parent_path());
}

std::string format_config(const RunConfig& config) {
  RunConfig copy = config;
  std::ostringstream out;
  for (const auto& f : fields(copy, {})) out << f.key << " = " << f.get() << '\n';
  return out.str();
}

void write_config(const fs::path& path, const RunConfig& config) { write_file(path, format_config(config)); }

void validate_config(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("invalid config: " + what);
  };
  require(c.train.batch_size > 0, "train.batch_size must be positive");
  require(c.train.log_every > 0, "train.log_every must be positive");
  require(c.train.checkpoint_every > 0, "train.checkpoint_every must be positive");
  require(c.optim.lr > 0.0, "optim.lr must be positive");
  require(c.optim.beta1 >= 0.0 && c.optim.beta1 < 1.0, "optim.beta1 must lie in [0, 1)");
  require(c.optim.beta2 >= 0.0 && c.optim.beta2 < 1.0, "optim.beta2 must lie in [0, 1)");
  require(c.optim.eps > 0.0, "optim.eps must be positive");
  require(c.tokenize.audio_k > 0 && c.tokenize.video_k > 0, "codebook sizes must be positive");
  require(c.tokenize.sample_cap > 0, "tokenize.sample_cap must be positive");
  require(c.video.frame_size > 0 && c.video.frame_size % features::kVideoPatchSize == 0,
          "video.frame_size must be a positive multiple of 16");
  require(c.video.frame_rate > 0.0, "video.frame_rate must be positive");
  require(!c.paths.data_dir.empty(), "paths.data_dir must be set");
  c.avbert.validate();
  c.asr.validate();
}

}  // namespace envasr
