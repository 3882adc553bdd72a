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

#include "envasr/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace envasr {

namespace {

template <typename U>
void put_le(std::string& out, U bits) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(const char* p) {
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(static_cast<unsigned char>(p[i])) << (8 * i);
  return bits;
}

}  // namespace

std::string_view dtype_name(DType dtype) { return dtype == DType::kF32 ? "f32" : "f64"; }

DType parse_dtype(std::string_view name) {
  if (name == "f32") return DType::kF32;
  if (name == "f64") return DType::kF64;
  throw std::runtime_error("unknown dtype '" + std::string(name) + "'");
}

std::size_t dtype_size(DType dtype) { return dtype == DType::kF32 ? 4 : 8; }

std::string encode_values(std::span<const Real> values, DType dtype) {
  std::string out;
  out.reserve(values.size() * dtype_size(dtype));
  for (Real v : values) {
    if (dtype == DType::kF32) {
      put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      put_le(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

std::vector<Real> decode_values(std::string_view bytes, std::size_t count, DType dtype) {
  const std::size_t width = dtype_size(dtype);
  if (bytes.size() < count * width) throw std::runtime_error("truncated tensor payload");
  std::vector<Real> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const char* p = bytes.data() + i * width;
    values[i] = dtype == DType::kF32 ? static_cast<Real>(std::bit_cast<float>(get_le<std::uint32_t>(p)))
                                     : std::bit_cast<double>(get_le<std::uint64_t>(p));
  }
  return values;
}

void write_tensor(std::ostream& out, const Tensor& tensor, DType dtype) {
  const auto& shape = tensor.shape();
  out << shape.size();
  for (auto d : shape) out << ' ' << d;
  out << '\n';
  const std::string payload = encode_values(tensor.data(), dtype);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

Tensor read_tensor(std::istream& in, DType dtype) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("missing tensor header");
  std::istringstream hs(header);
  std::size_t ndim = 0;
  if (!(hs >> ndim)) throw std::runtime_error("malformed tensor header: '" + header + "'");
  Shape shape(ndim);
  for (auto& d : shape) {
    if (!(hs >> d)) throw std::runtime_error("malformed tensor header: '" + header + "'");
  }
  const std::size_t count = shape_numel(shape);
  std::string payload(count * dtype_size(dtype), '\0');
  in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) throw std::runtime_error("truncated tensor payload");
  return Tensor::from(std::move(shape), decode_values(payload, count, dtype));
}

void write_tensor_file(const std::filesystem::path& path, const Tensor& tensor, DType dtype) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_tensor(out, tensor, dtype);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Tensor read_tensor_file(const std::filesystem::path& path, DType dtype) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_tensor(in, dtype);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace envasr
