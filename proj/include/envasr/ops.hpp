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
#include <cstdint>
#include <span>
#include <vector>

#include "envasr/tensor.hpp"

// Differentiable operations. Unless noted, matrices are 2-D row-major
// [rows x cols] and vectors broadcast over rows.
namespace envasr {

inline constexpr Real kNormEps = 1e-5;

// Elementwise.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, Real factor);
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor mul_row(const Tensor& x, const Tensor& gain);

Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
/// Gated linear unit over the column axis: first half * sigmoid(second half).
Tensor glu(const Tensor& x);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

/// Softmax along `axis` (negative counts from the back).
Tensor softmax(const Tensor& x, int axis = -1);
Tensor log_softmax(const Tensor& x);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps = kNormEps);
/// x is [channels x length]; each row is normalized over its own length.
Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps = kNormEps);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
/// Embedding lookup: out[i] = table[indices[i]].
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices);
/// out[i] = flags[i] ? replacement : x[i]; replacement is a single row.
Tensor select_rows(const Tensor& x, const Tensor& replacement, std::span<const std::uint8_t> flags);
/// Frames [T x D] to windows [T' x kernel*D], T' = (T - kernel) / stride + 1.
Tensor unfold_frames(const Tensor& x, std::size_t kernel, std::size_t stride);
/// Per-channel convolution over time with zero "same" padding (odd kernel).
/// x: [T x C], weight: [kernel x C], bias: [C].
Tensor depthwise_conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias);
/// out[t * U + u] = a[t] + b[u].
Tensor outer_add_rows(const Tensor& a, const Tensor& b);

/// Mean negative log-likelihood over positions whose ignore flag is 0.
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets,
                     std::span<const std::uint8_t> ignore);

/// Multi-head scaled dot-product attention without projections.
/// q: [Tq x d], k and v: [Tk x d]. When `weights` is non-null the per-head
/// attention matrices [Tq x Tk] are appended to it.
Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                            std::vector<Tensor>* weights = nullptr);

}  // namespace envasr
