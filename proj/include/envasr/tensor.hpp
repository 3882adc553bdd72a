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

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace envasr {

using Real = double;
using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<Real> data;
  std::vector<Real> grad;  // empty until first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Receives d(loss)/d(this) and accumulates into parents.
  std::function<void(const std::vector<Real>&)> backward_fn;

  std::vector<Real>& grad_buffer();
};

}  // namespace detail

/// Handle to an n-dimensional row-major array that can take part in
/// reverse-mode differentiation. Copies share the underlying storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<Real> values, bool requires_grad = false);
  static Tensor scalar(Real value);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t ndim() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;
  /// Leading extent; 1 for 1-D tensors.
  std::size_t rows() const;
  /// Trailing extent.
  std::size_t cols() const;

  std::span<const Real> data() const;
  /// Direct write access. Only for leaves (parameters, inputs) outside an
  /// active graph.
  std::span<Real> mutable_data();
  Real item() const;
  Real at(std::size_t r, std::size_t c) const;
  std::vector<Real> row(std::size_t r) const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  std::span<const Real> grad() const;
  std::span<Real> mutable_grad();
  void zero_grad();
  void clear_grad();

  /// Reverse-mode pass from a scalar. Leaf gradients accumulate; the
  /// recorded graph behind this tensor is released afterwards.
  void backward() const;

  /// Same values, no history, no gradient.
  Tensor detach() const;
  /// Deep copy of values as a fresh leaf.
  Tensor clone(bool requires_grad = false) const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Enables or disables the non-finite check run after every op on the
/// current thread. On by default in debug builds.
class FiniteCheckGuard {
 public:
  explicit FiniteCheckGuard(bool enabled);
  ~FiniteCheckGuard();
  FiniteCheckGuard(const FiniteCheckGuard&) = delete;
  FiniteCheckGuard& operator=(const FiniteCheckGuard&) = delete;

 private:
  bool previous_;
};

bool finite_checks_enabled();

namespace detail {

using BackwardFn = std::function<void(const std::vector<Real>&)>;

/// Builds an op result. History is recorded only when grad mode is on and
/// some parent requires a gradient.
Tensor make_result(const char* op, Shape shape, std::vector<Real> values,
                   std::vector<Tensor> parents, BackwardFn backward);

}  // namespace detail

}  // namespace envasr
