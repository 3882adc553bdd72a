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
#include <string>
#include <vector>

#include "envasr/ops.hpp"
#include "envasr/params.hpp"

namespace envasr {

/// Affine map y = x W + b with W stored [in x out].
struct Linear {
  Tensor weight;
  Tensor bias;  // undefined when constructed without bias

  Linear() = default;
  Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, std::uint64_t seed,
         bool with_bias = true);
  Tensor operator()(const Tensor& x) const;
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  LayerNorm() = default;
  LayerNorm(ParameterSet& params, const std::string& name, std::size_t dim);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }
};

/// Query/key/value/output projections around multi_head_attention.
struct AttentionLayer {
  Linear query, key, value, output;
  std::size_t heads = 1;

  AttentionLayer() = default;
  AttentionLayer(ParameterSet& params, const std::string& name, std::size_t dim, std::size_t heads,
                 std::uint64_t seed);
  /// Queries come from `x`, keys and values from `context`.
  Tensor operator()(const Tensor& x, const Tensor& context, std::vector<Tensor>* weights = nullptr) const;
};

enum class Activation { kGelu, kSilu, kRelu };

struct FeedForward {
  Linear up, down;
  Activation activation = Activation::kGelu;

  FeedForward() = default;
  FeedForward(ParameterSet& params, const std::string& name, std::size_t dim, std::size_t hidden,
              Activation activation, std::uint64_t seed);
  Tensor operator()(const Tensor& x) const;
};

Tensor activate(const Tensor& x, Activation activation);

}  // namespace envasr
