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

#include "envasr/checkpoint.hpp"

#include <sstream>
#include <stdexcept>
#include <vector>

#include "envasr/serialize.hpp"

namespace envasr {

namespace {

constexpr std::string_view kMagic = "envasr-checkpoint 1";

std::string shape_token(const Shape& shape) {
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) out += (i ? "x" : "") + std::to_string(shape[i]);
  return out.empty() ? "scalar" : out;
}

Shape parse_shape_token(const std::string& token) {
  if (token == "scalar") return {};
  Shape shape;
  std::istringstream in(token);
  for (std::string part; std::getline(in, part, 'x');) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw std::runtime_error("checkpoint: bad shape '" + token + "'");
    }
    shape.push_back(std::stoull(part));
  }
  return shape;
}

[[noreturn]] void corrupt(const std::string& what) { throw std::runtime_error("corrupt checkpoint: " + what); }

}  // namespace

Checkpoint capture_checkpoint(std::string kind, std::uint64_t step, std::string config, const ParameterSet& params) {
  Checkpoint ck;
  ck.kind = std::move(kind);
  ck.step = step;
  ck.adam_steps = params.adam_steps();
  ck.config = std::move(config);
  for (const auto& [name, t] : params) ck.tensors.emplace(name, t.clone());
  ck.moments = params.moments();
  return ck;
}

void restore_checkpoint(const Checkpoint& checkpoint, ParameterSet& params) {
  for (const auto& [name, saved] : checkpoint.tensors) {
    if (!params.contains(name)) throw std::runtime_error("checkpoint tensor '" + name + "' has no matching parameter");
  }
  for (const auto& [name, param] : params) {
    auto it = checkpoint.tensors.find(name);
    if (it == checkpoint.tensors.end()) throw std::runtime_error("checkpoint is missing parameter '" + name + "'");
    if (it->second.shape() != param.shape()) {
      throw std::runtime_error("shape mismatch for '" + name + "': checkpoint " + shape_str(it->second.shape()) +
                               ", model " + shape_str(param.shape()));
    }
  }
  for (const auto& [name, m] : checkpoint.moments) {
    const std::size_t n = params.at(name).size();
    if (m.first.size() != n || m.second.size() != n) {
      throw std::runtime_error("optimizer state size mismatch for '" + name + "'");
    }
  }
  for (const auto& [name, saved] : checkpoint.tensors) {
    auto dst = params.at(name).mutable_data();
    auto src = saved.data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
  params.moments() = checkpoint.moments;
  params.set_adam_steps(checkpoint.adam_steps);
}

std::string encode_checkpoint(const Checkpoint& ck) {
  std::ostringstream manifest;
  std::string payload;
  manifest << kMagic << '\n' << "kind " << ck.kind << '\n' << "step " << ck.step << '\n'
           << "adam_steps " << ck.adam_steps << '\n';
  std::istringstream config(ck.config);
  for (std::string line; std::getline(config, line);) {
    if (!line.empty()) manifest << "config " << line << '\n';
  }
  auto emit = [&](std::string_view tag, const std::string& name, const Shape& shape, std::span<const Real> values) {
    manifest << tag << ' ' << name << ' ' << shape_token(shape) << " f64 " << payload.size() << '\n';
    payload += encode_values(values, DType::kF64);
  };
  for (const auto& [name, t] : ck.tensors) emit("tensor", name, t.shape(), t.data());
  for (const auto& [name, m] : ck.moments) {
    const Shape& shape = ck.tensors.at(name).shape();
    emit("adam.m", name, shape, m.first);
    emit("adam.v", name, shape, m.second);
  }
  manifest << "payload " << payload.size() << "\nend\n";
  return manifest.str() + payload;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  struct Record {
    std::string tag, name;
    Shape shape;
    DType dtype;
    std::size_t offset;
  };
  Checkpoint ck;
  std::vector<Record> records;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) corrupt("manifest not terminated");
    std::string line(bytes.substr(pos, nl - pos));
    pos = nl + 1;
    return line;
  };
  if (next_line() != kMagic) corrupt("bad header");
  std::size_t payload_size = 0;
  bool have_payload = false;
  for (std::string line = next_line(); line != "end"; line = next_line()) {
    std::istringstream in(line);
    std::string tag;
    in >> tag;
    if (tag == "kind") {
      in >> ck.kind;
    } else if (tag == "step") {
      in >> ck.step;
    } else if (tag == "adam_steps") {
      in >> ck.adam_steps;
    } else if (tag == "config") {
      ck.config += line.substr(7) + '\n';
      continue;
    } else if (tag == "tensor" || tag == "adam.m" || tag == "adam.v") {
      Record r;
      r.tag = tag;
      std::string shape, dtype;
      in >> r.name >> shape >> dtype >> r.offset;
      if (!in) corrupt("bad record '" + line + "'");
      r.shape = parse_shape_token(shape);
      try {
        r.dtype = parse_dtype(dtype);
      } catch (const std::exception&) {
        corrupt("bad dtype in '" + line + "'");
      }
      records.push_back(std::move(r));
      continue;
    } else if (tag == "payload") {
      in >> payload_size;
      have_payload = true;
    } else {
      corrupt("unknown manifest entry '" + tag + "'");
    }
    if (!in) corrupt("bad line '" + line + "'");
  }
  if (!have_payload) corrupt("missing payload size");
  const std::string_view payload = bytes.substr(pos);
  if (payload.size() != payload_size) {
    corrupt("payload is " + std::to_string(payload.size()) + " bytes, manifest says " + std::to_string(payload_size));
  }
  for (const auto& r : records) {
    const std::size_t count = shape_numel(r.shape);
    const std::size_t len = count * dtype_size(r.dtype);
    if (r.offset > payload.size() || len > payload.size() - r.offset) corrupt("record '" + r.name + "' out of range");
    std::vector<Real> values = decode_values(payload.substr(r.offset, len), count, r.dtype);
    if (r.tag == "tensor") {
      if (!ck.tensors.emplace(r.name, Tensor::from(r.shape, std::move(values))).second) {
        corrupt("duplicate tensor '" + r.name + "'");
      }
    } else {
      auto& m = ck.moments[r.name];
      (r.tag == "adam.m" ? m.first : m.second) = std::move(values);
    }
  }
  for (const auto& [name, m] : ck.moments) {
    if (!ck.tensors.count(name)) corrupt("optimizer state for unknown tensor '" + name + "'");
    if (m.first.size() != m.second.size()) corrupt("incomplete optimizer state for '" + name + "'");
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Write then rename so an interrupted save never leaves a torn file.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  write_file(tmp, encode_checkpoint(checkpoint));
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("checkpoint not found: " + path.string());
  return decode_checkpoint(read_file(path));
}

}  // namespace envasr
