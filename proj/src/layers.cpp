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

#include "envasr/layers.hpp"

#include <cmath>

namespace envasr {

Linear::Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, std::uint64_t seed,
               bool with_bias) {
  const std::string wname = name + ".weight";
  weight = params.add(wname, init_normal({in, out}, 1.0 / std::sqrt(static_cast<Real>(in)), seed, wname));
  if (with_bias) bias = params.add(name + ".bias", init_constant({out}, 0.0));
}

Tensor Linear::operator()(const Tensor& x) const {
  Tensor y = matmul(x, weight);
  return bias.defined() ? add_bias(y, bias) : y;
}

LayerNorm::LayerNorm(ParameterSet& params, const std::string& name, std::size_t dim) {
  gamma = params.add(name + ".gamma", init_constant({dim}, 1.0));
  beta = params.add(name + ".beta", init_constant({dim}, 0.0));
}

AttentionLayer::AttentionLayer(ParameterSet& params, const std::string& name, std::size_t dim, std::size_t heads,
                               std::uint64_t seed)
    : query(params, name + ".query", dim, dim, seed),
      key(params, name + ".key", dim, dim, seed),
      value(params, name + ".value", dim, dim, seed),
      output(params, name + ".output", dim, dim, seed),
      heads(heads) {}

Tensor AttentionLayer::operator()(const Tensor& x, const Tensor& context, std::vector<Tensor>* weights) const {
  return output(multi_head_attention(query(x), key(context), value(context), heads, weights));
}

FeedForward::FeedForward(ParameterSet& params, const std::string& name, std::size_t dim, std::size_t hidden,
                         Activation activation, std::uint64_t seed)
    : up(params, name + ".up", dim, hidden, seed), down(params, name + ".down", hidden, dim, seed),
      activation(activation) {}

Tensor FeedForward::operator()(const Tensor& x) const { return down(activate(up(x), activation)); }

Tensor activate(const Tensor& x, Activation activation) {
  switch (activation) {
    case Activation::kGelu:
      return gelu(x);
    case Activation::kSilu:
      return silu(x);
    case Activation::kRelu:
      return relu(x);
  }
  return x;
}

}  // namespace envasr
