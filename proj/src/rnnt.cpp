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

#include "envasr/rnnt.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace envasr {

Real log_add(Real a, Real b) {
  constexpr Real kNegInf = -std::numeric_limits<Real>::infinity();
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

TransducerLattice transducer_lattice(std::span<const Real> log_probs, std::size_t frames, std::size_t num_classes,
                                     std::span<const std::size_t> labels, std::size_t blank) {
  const std::size_t u_len = labels.size();
  const std::size_t cols = u_len + 1;
  if (frames == 0) throw std::invalid_argument("rnnt: need at least one frame");
  if (log_probs.size() != frames * cols * num_classes) {
    throw std::invalid_argument("rnnt: log-prob table has " + std::to_string(log_probs.size()) + " entries, expected " +
                                std::to_string(frames * cols * num_classes));
  }
  if (blank >= num_classes) throw std::invalid_argument("rnnt: blank index outside the class range");
  for (std::size_t y : labels) {
    if (y >= num_classes || y == blank) throw std::invalid_argument("rnnt: invalid label " + std::to_string(y));
  }
  for (Real v : log_probs) {
    if (!std::isfinite(v)) throw std::domain_error("rnnt: non-finite log-probability");
  }
  auto lp = [&](std::size_t t, std::size_t u, std::size_t k) { return log_probs[(t * cols + u) * num_classes + k]; };

  TransducerLattice lat;
  lat.frames = frames;
  lat.label_count = u_len;
  lat.alpha.assign(frames * cols, 0.0);
  lat.beta.assign(frames * cols, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t u = 0; u <= u_len; ++u) {
      if (t == 0 && u == 0) continue;
      Real a = -std::numeric_limits<Real>::infinity();
      if (t > 0) a = lat.alpha[(t - 1) * cols + u] + lp(t - 1, u, blank);
      if (u > 0) a = log_add(a, lat.alpha[t * cols + u - 1] + lp(t, u - 1, labels[u - 1]));
      lat.alpha[t * cols + u] = a;
    }
  }
  lat.log_likelihood = lat.alpha[(frames - 1) * cols + u_len] + lp(frames - 1, u_len, blank);

  for (std::size_t t = frames; t-- > 0;) {
    for (std::size_t u = u_len + 1; u-- > 0;) {
      if (t == frames - 1 && u == u_len) {
        lat.beta[t * cols + u] = lp(t, u, blank);
        continue;
      }
      Real b = -std::numeric_limits<Real>::infinity();
      if (t + 1 < frames) b = lat.beta[(t + 1) * cols + u] + lp(t, u, blank);
      if (u < u_len) b = log_add(b, lat.beta[t * cols + u + 1] + lp(t, u, labels[u]));
      lat.beta[t * cols + u] = b;
    }
  }
  return lat;
}

Tensor rnnt_loss(const Tensor& log_probs, std::size_t frames, std::span<const std::size_t> labels, std::size_t blank) {
  if (log_probs.ndim() != 2) throw std::invalid_argument("rnnt_loss: expected a [(T*(U+1)) x classes] matrix");
  const std::size_t classes = log_probs.cols();
  TransducerLattice lat = transducer_lattice(log_probs.data(), frames, classes, labels, blank);
  std::vector<std::size_t> y(labels.begin(), labels.end());
  return detail::make_result(
      "rnnt_loss", {}, {-lat.log_likelihood}, {log_probs},
      [log_probs, lat = std::move(lat), y = std::move(y), blank, classes](const std::vector<Real>& g) {
        if (!log_probs.requires_grad()) return;
        auto& grad = log_probs.node()->grad_buffer();
        auto lp = log_probs.data();
        const std::size_t cols = y.size() + 1;
        const Real total = lat.log_likelihood;
        for (std::size_t t = 0; t < lat.frames; ++t) {
          for (std::size_t u = 0; u < cols; ++u) {
            const std::size_t row = (t * cols + u) * classes;
            const Real a = lat.alpha[t * cols + u];
            // Blank moves to (t+1, u); the final blank ends the path.
            if (t + 1 < lat.frames) {
              grad[row + blank] -= g[0] * std::exp(a + lp[row + blank] + lat.beta[(t + 1) * cols + u] - total);
            } else if (u == y.size()) {
              grad[row + blank] -= g[0] * std::exp(a + lp[row + blank] - total);
            }
            if (u < y.size()) {
              const Real next_label = lat.beta[t * cols + u + 1];
              grad[row + y[u]] -= g[0] * std::exp(a + lp[row + y[u]] + next_label - total);
            }
          }
        }
      });
}

}  // namespace envasr
