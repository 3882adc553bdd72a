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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "envasr/tensor.hpp"

namespace envasr {

struct AdamOptions {
  Real lr = 3e-4;
  Real beta1 = 0.9;
  Real beta2 = 0.99;
  Real eps = 1e-8;
};

struct AdamMoments {
  std::vector<Real> first;
  std::vector<Real> second;
};

/// Named trainable tensors plus their Adam state. Iteration is sorted by
/// name.
class ParameterSet {
 public:
  /// Registers a new trainable tensor. Throws on a duplicate name.
  Tensor& add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return params_.count(name) > 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }
  bool empty() const { return params_.empty(); }

  void zero_grad();
  void clear_grad();

  std::map<std::string, AdamMoments>& moments() { return moments_; }
  const std::map<std::string, AdamMoments>& moments() const { return moments_; }
  std::uint64_t adam_steps() const { return adam_steps_; }
  void set_adam_steps(std::uint64_t steps) { adam_steps_ = steps; }

 private:
  std::map<std::string, Tensor> params_;
  std::map<std::string, AdamMoments> moments_;
  std::uint64_t adam_steps_ = 0;
};

/// Bias-corrected Adam update over every parameter; gradients are cleared
/// afterwards. Throws std::logic_error if any parameter lacks a gradient.
void adam_step(ParameterSet& params, const AdamOptions& options = {});

std::size_t count_parameters(const ParameterSet& params);

/// FNV-1a over names, shapes and raw value bytes in name order.
std::uint64_t parameter_hash(const ParameterSet& params);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ull);

/// Mixes a base seed with a stream name so independent consumers get
/// independent, reproducible random streams.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

/// Gaussian init N(0, stddev^2) drawn from a stream keyed by `name`, so a
/// parameter's initial values depend only on (seed, name).
Tensor init_normal(Shape shape, Real stddev, std::uint64_t seed, std::string_view name);
Tensor init_constant(Shape shape, Real value);

}  // namespace envasr
