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

#include "envasr/params.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

namespace envasr {

Tensor& ParameterSet::add(const std::string& name, Tensor value) {
  if (params_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  value.set_requires_grad(true);
  auto [it, inserted] = params_.emplace(name, std::move(value));
  return it->second;
}

Tensor& ParameterSet::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParameterSet::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

void ParameterSet::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

void ParameterSet::clear_grad() {
  for (auto& [name, p] : params_) p.clear_grad();
}

void adam_step(ParameterSet& params, const AdamOptions& options) {
  for (const auto& [name, p] : params) {
    if (!p.has_grad()) throw std::logic_error("adam_step: parameter '" + name + "' has no gradient");
  }
  const std::uint64_t step = params.adam_steps() + 1;
  const Real bc1 = 1.0 - std::pow(options.beta1, static_cast<Real>(step));
  const Real bc2 = 1.0 - std::pow(options.beta2, static_cast<Real>(step));
  for (const auto& [name, const_p] : params) {
    Tensor p = const_p;
    auto& state = params.moments()[name];
    if (state.first.size() != p.size()) {
      state.first.assign(p.size(), 0.0);
      state.second.assign(p.size(), 0.0);
    }
    auto values = p.mutable_data();
    auto grad = p.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const Real g = grad[i];
      state.first[i] = options.beta1 * state.first[i] + (1.0 - options.beta1) * g;
      state.second[i] = options.beta2 * state.second[i] + (1.0 - options.beta2) * g * g;
      const Real m_hat = state.first[i] / bc1;
      const Real v_hat = state.second[i] / bc2;
      values[i] -= options.lr * m_hat / (std::sqrt(v_hat) + options.eps);
    }
    p.clear_grad();
  }
  params.set_adam_steps(step);
}

std::size_t count_parameters(const ParameterSet& params) {
  std::size_t total = 0;
  for (const auto& [name, p] : params) total += p.size();
  return total;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t parameter_hash(const ParameterSet& params) {
  std::uint64_t h = fnv1a("");
  for (const auto& [name, p] : params) {
    h = fnv1a(name, h);
    for (auto d : p.shape()) h = fnv1a(std::string_view(reinterpret_cast<const char*>(&d), sizeof d), h);
    auto data = p.data();
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(data.data()), data.size_bytes()), h);
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
  std::uint64_t h = fnv1a(std::string_view(reinterpret_cast<const char*>(&seed), sizeof seed));
  h = fnv1a(stream, h);
  // splitmix64 finalizer
  h += 0x9e3779b97f4a7c15ull;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
  return h ^ (h >> 31);
}

Tensor init_normal(Shape shape, Real stddev, std::uint64_t seed, std::string_view name) {
  std::mt19937_64 rng(derive_seed(seed, name));
  std::normal_distribution<Real> dist(0.0, stddev);
  std::vector<Real> values(shape_numel(shape));
  for (auto& v : values) v = dist(rng);
  return Tensor::from(std::move(shape), std::move(values));
}

Tensor init_constant(Shape shape, Real value) { return Tensor::full(std::move(shape), value); }

}  // namespace envasr
