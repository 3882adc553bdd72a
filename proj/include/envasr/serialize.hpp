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

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "envasr/tensor.hpp"

namespace envasr {

enum class DType { kF32, kF64 };

std::string_view dtype_name(DType dtype);
DType parse_dtype(std::string_view name);
std::size_t dtype_size(DType dtype);

/// Little-endian payload bytes for `values`.
std::string encode_values(std::span<const Real> values, DType dtype);
std::vector<Real> decode_values(std::string_view bytes, std::size_t count, DType dtype);

/// Raw tensor stream: text line `ndim d0 ... dn` then little-endian values
/// in row-major order. The interchange format is f32; f64 is used for
/// internal caches that must round-trip exactly.
void write_tensor(std::ostream& out, const Tensor& tensor, DType dtype = DType::kF32);
Tensor read_tensor(std::istream& in, DType dtype = DType::kF32);

void write_tensor_file(const std::filesystem::path& path, const Tensor& tensor, DType dtype = DType::kF32);
Tensor read_tensor_file(const std::filesystem::path& path, DType dtype = DType::kF32);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace envasr
