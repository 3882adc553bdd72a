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
#include <map>
#include <string>

#include "envasr/params.hpp"

// Checkpoint file: a text manifest, the line `end`, then the payload.
//
//   envasr-checkpoint 1
//   kind <avbert|asr>
//   step <n>
//   adam_steps <n>
//   config <key> = <value>            (config snapshot, repeated)
//   tensor <name> <d0xd1..> f64 <byte_offset>
//   adam.m <name> <shape> f64 <byte_offset>
//   adam.v <name> <shape> f64 <byte_offset>
//   payload <bytes>
//   end
//
// Values are stored as f64 so parameters and optimizer moments reload
// bit-exactly.
namespace envasr {

struct Checkpoint {
  std::string kind;
  /// Optimizer / schedule step the run resumes from.
  std::uint64_t step = 0;
  std::uint64_t adam_steps = 0;
  /// Full config text as written by format_config.
  std::string config;
  std::map<std::string, Tensor> tensors;
  std::map<std::string, AdamMoments> moments;
};

/// Copies parameter values and Adam state out of `params`.
Checkpoint capture_checkpoint(std::string kind, std::uint64_t step, std::string config, const ParameterSet& params);

/// Writes values and Adam state into `params`. Throws std::runtime_error on
/// a missing, extra or differently shaped tensor.
void restore_checkpoint(const Checkpoint& checkpoint, ParameterSet& params);

std::string encode_checkpoint(const Checkpoint& checkpoint);
/// Throws std::runtime_error on a malformed manifest or truncated payload.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace envasr
