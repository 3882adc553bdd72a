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

#include <span>
#include <vector>

#include "envasr/tensor.hpp"

namespace envasr {

/// Forward/backward log sums over the T x (U+1) transducer lattice.
/// Log-probabilities are laid out [(T * (U+1)) x num_classes], row
/// t * (U+1) + u holding the distribution emitted at frame t after u labels.
struct TransducerLattice {
  std::size_t frames = 0;
  std::size_t label_count = 0;
  std::vector<Real> alpha;  // [T x (U+1)]
  std::vector<Real> beta;   // [T x (U+1)]
  Real log_likelihood = 0.0;  // alpha(T-1, U) + blank(T-1, U)

  Real alpha_at(std::size_t t, std::size_t u) const { return alpha[t * (label_count + 1) + u]; }
  Real beta_at(std::size_t t, std::size_t u) const { return beta[t * (label_count + 1) + u]; }
};

Real log_add(Real a, Real b);

TransducerLattice transducer_lattice(std::span<const Real> log_probs, std::size_t frames, std::size_t num_classes,
                                     std::span<const std::size_t> labels, std::size_t blank);

/// Negative log-likelihood of `labels` summed over all monotonic
/// alignments. `log_probs` must already be log-normalized per row.
Tensor rnnt_loss(const Tensor& log_probs, std::size_t frames, std::span<const std::size_t> labels, std::size_t blank);

}  // namespace envasr
