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

#include "envasr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace envasr {

using detail::make_result;

namespace {

// Gradient buffer of a parent, or null when it does not take gradients.
std::vector<Real>* grad_of(const Tensor& t) {
  return t.requires_grad() ? &t.node()->grad_buffer() : nullptr;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void require_matrix(const Tensor& x, const char* op) {
  require(x.ndim() == 2, std::string(op) + ": expected a matrix, got " + shape_str(x.shape()));
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(),
          std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void require_row_vector(const Tensor& x, const Tensor& v, const char* op) {
  require(v.size() == x.cols(), std::string(op) + ": vector of " + std::to_string(v.size()) +
                                    " does not match trailing extent " + std::to_string(x.cols()));
}

template <typename Fwd, typename Deriv>
Tensor unary(const char* op, const Tensor& x, Fwd fwd, Deriv deriv) {
  auto in = x.data();
  std::vector<Real> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  auto out_copy = out;
  return make_result(op, x.shape(), std::move(out), {x}, [x, deriv, y = std::move(out_copy)](const auto& g) {
    auto* gx = grad_of(x);
    if (!gx) return;
    auto in = x.data();
    for (std::size_t i = 0; i < in.size(); ++i) (*gx)[i] += g[i] * deriv(in[i], y[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  auto da = a.data(), db = b.data();
  std::vector<Real> out(da.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] + db[i];
  return make_result("add", a.shape(), std::move(out), {a, b}, [a, b](const auto& g) {
    if (auto* ga = grad_of(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (auto* gb = grad_of(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  auto da = a.data(), db = b.data();
  std::vector<Real> out(da.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] - db[i];
  return make_result("sub", a.shape(), std::move(out), {a, b}, [a, b](const auto& g) {
    if (auto* ga = grad_of(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (auto* gb = grad_of(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  auto da = a.data(), db = b.data();
  std::vector<Real> out(da.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] * db[i];
  return make_result("mul", a.shape(), std::move(out), {a, b}, [a, b](const auto& g) {
    auto da = a.data(), db = b.data();
    if (auto* ga = grad_of(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * db[i];
    if (auto* gb = grad_of(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * da[i];
  });
}

Tensor scale(const Tensor& x, Real factor) {
  auto in = x.data();
  std::vector<Real> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * factor;
  return make_result("scale", x.shape(), std::move(out), {x}, [x, factor](const auto& g) {
    if (auto* gx = grad_of(x))
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * factor;
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_row_vector(x, bias, "add_bias");
  auto in = x.data(), b = bias.data();
  const std::size_t n = x.cols();
  std::vector<Real> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] + b[i % n];
  return make_result("add_bias", x.shape(), std::move(out), {x, bias}, [x, bias, n](const auto& g) {
    if (auto* gx = grad_of(x))
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
    if (auto* gb = grad_of(bias))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i % n] += g[i];
  });
}

Tensor mul_row(const Tensor& x, const Tensor& gain) {
  require_row_vector(x, gain, "mul_row");
  auto in = x.data(), w = gain.data();
  const std::size_t n = x.cols();
  std::vector<Real> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * w[i % n];
  return make_result("mul_row", x.shape(), std::move(out), {x, gain}, [x, gain, n](const auto& g) {
    auto in = x.data(), w = gain.data();
    if (auto* gx = grad_of(x))
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * w[i % n];
    if (auto* gw = grad_of(gain))
      for (std::size_t i = 0; i < g.size(); ++i) (*gw)[i % n] += g[i] * in[i];
  });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](Real v) { return v > 0 ? v : 0.0; }, [](Real v, Real) { return v > 0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
  constexpr Real inv_sqrt2 = 0.70710678118654752440;
  const Real inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return unary(
      "gelu", x, [](Real v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
      [inv_sqrt_2pi](Real v, Real) {
        return 0.5 * (1.0 + std::erf(v * inv_sqrt2)) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
      });
}

Tensor silu(const Tensor& x) {
  return unary(
      "silu", x, [](Real v) { return v / (1.0 + std::exp(-v)); },
      [](Real v, Real) {
        const Real s = 1.0 / (1.0 + std::exp(-v));
        return s * (1.0 + v * (1.0 - s));
      });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](Real v) { return std::tanh(v); }, [](Real, Real y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x, [](Real v) { return 1.0 / (1.0 + std::exp(-v)); }, [](Real, Real y) { return y * (1.0 - y); });
}

Tensor glu(const Tensor& x) {
  require_matrix(x, "glu");
  const std::size_t rows = x.rows(), cols = x.cols();
  require(cols % 2 == 0, "glu: odd column count");
  const std::size_t half = cols / 2;
  auto in = x.data();
  std::vector<Real> out(rows * half);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < half; ++c) {
      const Real gate = 1.0 / (1.0 + std::exp(-in[r * cols + half + c]));
      out[r * half + c] = in[r * cols + c] * gate;
    }
  }
  return make_result("glu", {rows, half}, std::move(out), {x}, [x, rows, cols, half](const auto& g) {
    auto* gx = grad_of(x);
    if (!gx) return;
    auto in = x.data();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < half; ++c) {
        const Real a = in[r * cols + c];
        const Real s = 1.0 / (1.0 + std::exp(-in[r * cols + half + c]));
        const Real go = g[r * half + c];
        (*gx)[r * cols + c] += go * s;
        (*gx)[r * cols + half + c] += go * a * s * (1.0 - s);
      }
    }
  });
}

namespace {

// c[m x n] += a[m x k] * b[k x n]
void gemm_nn(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    Real* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = a[i * k + p];
      if (av == 0.0) continue;
      const Real* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// c[m x k] += g[m x n] * b[k x n]^T
void gemm_nt(const Real* g, const Real* b, Real* c, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real* bp = b + p * n;
      Real acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += gi[j] * bp[j];
      c[i * k + p] += acc;
    }
  }
}

// c[k x n] += a[m x k]^T * g[m x n]
void gemm_tn(const Real* a, const Real* g, Real* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = a[i * k + p];
      if (av == 0.0) continue;
      Real* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * gi[j];
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  require(b.rows() == k, "matmul: inner dimensions differ: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  std::vector<Real> out(m * n, 0.0);
  gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_result("matmul", {m, n}, std::move(out), {a, b}, [a, b, m, k, n](const auto& g) {
    if (auto* ga = grad_of(a)) gemm_nt(g.data(), b.data().data(), ga->data(), m, n, k);
    if (auto* gb = grad_of(b)) gemm_tn(a.data().data(), g.data(), gb->data(), m, k, n);
  });
}

Tensor transpose(const Tensor& x) {
  require_matrix(x, "transpose");
  const std::size_t r = x.rows(), c = x.cols();
  auto in = x.data();
  std::vector<Real> out(in.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = in[i * c + j];
  return make_result("transpose", {c, r}, std::move(out), {x}, [x, r, c](const auto& g) {
    if (auto* gx = grad_of(x))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) (*gx)[i * c + j] += g[j * r + i];
  });
}

Tensor softmax(const Tensor& x, int axis) {
  const auto& shape = x.shape();
  require(!shape.empty(), "softmax: scalar input");
  const int nd = static_cast<int>(shape.size());
  if (axis < 0) axis += nd;
  require(axis >= 0 && axis < nd, "softmax: axis out of range");
  const std::size_t len = shape[static_cast<std::size_t>(axis)];
  require(len >= 1, "softmax: empty axis");
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= shape[static_cast<std::size_t>(i)];
  for (int i = axis + 1; i < nd; ++i) inner *= shape[static_cast<std::size_t>(i)];

  auto in = x.data();
  std::vector<Real> out(in.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      Real mx = in[base];
      for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, in[base + j * inner]);
      Real total = 0.0;
      for (std::size_t j = 0; j < len; ++j) total += out[base + j * inner] = std::exp(in[base + j * inner] - mx);
      for (std::size_t j = 0; j < len; ++j) out[base + j * inner] /= total;
    }
  }
  auto y = out;
  return make_result("softmax", shape, std::move(out), {x}, [x, y = std::move(y), outer, inner, len](const auto& g) {
    auto* gx = grad_of(x);
    if (!gx) return;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t base = o * len * inner + i;
        Real dot = 0.0;
        for (std::size_t j = 0; j < len; ++j) dot += g[base + j * inner] * y[base + j * inner];
        for (std::size_t j = 0; j < len; ++j) {
          const std::size_t idx = base + j * inner;
          (*gx)[idx] += y[idx] * (g[idx] - dot);
        }
      }
    }
  });
}

Tensor log_softmax(const Tensor& x) {
  const std::size_t rows = x.rows(), cols = x.cols();
  require(cols >= 1, "log_softmax: empty axis");
  auto in = x.data();
  std::vector<Real> out(in.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = in.data() + r * cols;
    const Real mx = *std::max_element(row, row + cols);
    Real total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(row[c] - mx);
    const Real lse = mx + std::log(total);
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = row[c] - lse;
  }
  auto y = out;
  return make_result("log_softmax", x.shape(), std::move(out), {x}, [x, y = std::move(y), rows, cols](const auto& g) {
    auto* gx = grad_of(x);
    if (!gx) return;
    for (std::size_t r = 0; r < rows; ++r) {
      Real gsum = 0.0;
      for (std::size_t c = 0; c < cols; ++c) gsum += g[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        (*gx)[i] += g[i] - std::exp(y[i]) * gsum;
      }
    }
  });
}

namespace {

// Shared core of layer_norm and instance_norm: normalizes every row of
// x over its columns, then applies gain/shift indexed by column (layer) or
// by row (instance).
Tensor row_norm(const char* op, const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps,
                bool affine_per_row) {
  const std::size_t rows = x.rows(), cols = x.cols();
  require(cols >= 1, std::string(op) + ": empty normalization axis");
  const std::size_t affine_len = affine_per_row ? rows : cols;
  require(gamma.size() == affine_len && beta.size() == affine_len,
          std::string(op) + ": affine parameters must have " + std::to_string(affine_len) + " entries");
  auto in = x.data(), gm = gamma.data(), bt = beta.data();
  std::vector<Real> out(in.size()), xhat(in.size()), inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = in.data() + r * cols;
    Real mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += row[c];
    mu /= static_cast<Real>(cols);
    Real var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<Real>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      const std::size_t a = affine_per_row ? r : c;
      xhat[i] = (row[c] - mu) * inv_std[r];
      out[i] = xhat[i] * gm[a] + bt[a];
    }
  }
  return make_result(op, x.shape(), std::move(out), {x, gamma, beta},
                     [x, gamma, beta, rows, cols, affine_per_row, xhat = std::move(xhat),
                      inv_std = std::move(inv_std)](const auto& g) {
                       auto gm = gamma.data();
                       auto* gx = grad_of(x);
                       auto* gg = grad_of(gamma);
                       auto* gb = grad_of(beta);
                       for (std::size_t r = 0; r < rows; ++r) {
                         Real sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                         for (std::size_t c = 0; c < cols; ++c) {
                           const std::size_t i = r * cols + c;
                           const std::size_t a = affine_per_row ? r : c;
                           const Real dxhat = g[i] * gm[a];
                           sum_dxhat += dxhat;
                           sum_dxhat_xhat += dxhat * xhat[i];
                           if (gg) (*gg)[a] += g[i] * xhat[i];
                           if (gb) (*gb)[a] += g[i];
                         }
                         if (!gx) continue;
                         const Real n = static_cast<Real>(cols);
                         for (std::size_t c = 0; c < cols; ++c) {
                           const std::size_t i = r * cols + c;
                           const std::size_t a = affine_per_row ? r : c;
                           const Real dxhat = g[i] * gm[a];
                           (*gx)[i] += inv_std[r] * (dxhat - sum_dxhat / n - xhat[i] * sum_dxhat_xhat / n);
                         }
                       }
                     });
}

}  // namespace

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps) {
  return row_norm("layer_norm", x, gamma, beta, eps, false);
}

Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps) {
  require_matrix(x, "instance_norm");
  return row_norm("instance_norm", x, gamma, beta, eps, true);
}

Tensor sum(const Tensor& x) {
  Real total = 0.0;
  for (Real v : x.data()) total += v;
  return make_result("sum", {}, {total}, {x}, [x](const auto& g) {
    if (auto* gx = grad_of(x))
      for (auto& v : *gx) v += g[0];
  });
}

Tensor mean(const Tensor& x) {
  require(x.size() > 0, "mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<Real>(x.size()));
}

Tensor concat_rows(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<Tensor> parents;
  for (const auto& p : parts) {
    require_matrix(p, "concat_rows");
    require(p.cols() == cols, "concat_rows: column count mismatch");
    rows += p.rows();
    parents.push_back(p);
  }
  std::vector<Real> out;
  out.reserve(rows * cols);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  auto captured = parents;
  return make_result("concat_rows", {rows, cols}, std::move(out), std::move(parents),
                     [parts = std::move(captured)](const auto& g) {
                       std::size_t offset = 0;
                       for (const auto& p : parts) {
                         if (auto* gp = grad_of(p))
                           for (std::size_t i = 0; i < p.size(); ++i) (*gp)[i] += g[offset + i];
                         offset += p.size();
                       }
                     });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<Tensor> parents;
  for (const auto& p : parts) {
    require_matrix(p, "concat_cols");
    require(p.rows() == rows, "concat_cols: row count mismatch");
    cols += p.cols();
    parents.push_back(p);
  }
  std::vector<Real> out(rows * cols);
  std::size_t col0 = 0;
  for (const auto& p : parts) {
    auto d = p.data();
    const std::size_t pc = p.cols();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pc; ++c) out[r * cols + col0 + c] = d[r * pc + c];
    col0 += pc;
  }
  auto captured = parents;
  return make_result("concat_cols", {rows, cols}, std::move(out), std::move(parents),
                     [parts = std::move(captured), rows, cols](const auto& g) {
                       std::size_t col0 = 0;
                       for (const auto& p : parts) {
                         const std::size_t pc = p.cols();
                         if (auto* gp = grad_of(p))
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t c = 0; c < pc; ++c) (*gp)[r * pc + c] += g[r * cols + col0 + c];
                         col0 += pc;
                       }
                     });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_rows");
  require(begin <= end && end <= x.rows(), "slice_rows: range out of bounds");
  const std::size_t cols = x.cols();
  auto in = x.data();
  std::vector<Real> out(in.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                        in.begin() + static_cast<std::ptrdiff_t>(end * cols));
  return make_result("slice_rows", {end - begin, cols}, std::move(out), {x}, [x, begin, cols](const auto& g) {
    if (auto* gx = grad_of(x))
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[begin * cols + i] += g[i];
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_cols");
  require(begin <= end && end <= x.cols(), "slice_cols: range out of bounds");
  const std::size_t rows = x.rows(), cols = x.cols(), w = end - begin;
  auto in = x.data();
  std::vector<Real> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < w; ++c) out[r * w + c] = in[r * cols + begin + c];
  return make_result("slice_cols", {rows, w}, std::move(out), {x}, [x, begin, rows, cols, w](const auto& g) {
    if (auto* gx = grad_of(x))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < w; ++c) (*gx)[r * cols + begin + c] += g[r * w + c];
  });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices) {
  require_matrix(table, "gather_rows");
  const std::size_t cols = table.cols();
  auto in = table.data();
  std::vector<Real> out(indices.size() * cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] < table.rows(), "gather_rows: index " + std::to_string(indices[i]) + " out of range");
    std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(indices[i] * cols), cols, out.begin() + i * cols);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return make_result("gather_rows", {indices.size(), cols}, std::move(out), {table},
                     [table, idx = std::move(idx), cols](const auto& g) {
                       if (auto* gt = grad_of(table))
                         for (std::size_t i = 0; i < idx.size(); ++i)
                           for (std::size_t c = 0; c < cols; ++c) (*gt)[idx[i] * cols + c] += g[i * cols + c];
                     });
}

Tensor select_rows(const Tensor& x, const Tensor& replacement, std::span<const std::uint8_t> flags) {
  require_matrix(x, "select_rows");
  require(flags.size() == x.rows(), "select_rows: flag count does not match rows");
  require(replacement.size() == x.cols(), "select_rows: replacement width mismatch");
  const std::size_t cols = x.cols();
  auto in = x.data(), rep = replacement.data();
  std::vector<Real> out(in.begin(), in.end());
  for (std::size_t r = 0; r < flags.size(); ++r)
    if (flags[r]) std::copy(rep.begin(), rep.end(), out.begin() + r * cols);
  std::vector<std::uint8_t> f(flags.begin(), flags.end());
  return make_result("select_rows", x.shape(), std::move(out), {x, replacement},
                     [x, replacement, f = std::move(f), cols](const auto& g) {
                       auto* gx = grad_of(x);
                       auto* gr = grad_of(replacement);
                       for (std::size_t r = 0; r < f.size(); ++r) {
                         for (std::size_t c = 0; c < cols; ++c) {
                           if (f[r]) {
                             if (gr) (*gr)[c] += g[r * cols + c];
                           } else if (gx) {
                             (*gx)[r * cols + c] += g[r * cols + c];
                           }
                         }
                       }
                     });
}

Tensor unfold_frames(const Tensor& x, std::size_t kernel, std::size_t stride) {
  require_matrix(x, "unfold_frames");
  require(kernel >= 1 && stride >= 1, "unfold_frames: kernel and stride must be positive");
  const std::size_t t = x.rows(), d = x.cols();
  require(t >= kernel, "unfold_frames: need at least " + std::to_string(kernel) + " frames, got " + std::to_string(t));
  const std::size_t out_t = (t - kernel) / stride + 1, w = kernel * d;
  auto in = x.data();
  std::vector<Real> out(out_t * w);
  for (std::size_t i = 0; i < out_t; ++i)
    std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(i * stride * d), w, out.begin() + i * w);
  return make_result("unfold_frames", {out_t, w}, std::move(out), {x}, [x, out_t, stride, d, w](const auto& g) {
    if (auto* gx = grad_of(x))
      for (std::size_t i = 0; i < out_t; ++i)
        for (std::size_t j = 0; j < w; ++j) (*gx)[i * stride * d + j] += g[i * w + j];
  });
}

Tensor depthwise_conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_matrix(x, "depthwise_conv1d");
  require_matrix(weight, "depthwise_conv1d");
  const std::size_t t = x.rows(), ch = x.cols(), k = weight.rows();
  require(weight.cols() == ch && bias.size() == ch, "depthwise_conv1d: channel mismatch");
  require(k % 2 == 1, "depthwise_conv1d: kernel must be odd");
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  auto in = x.data(), w = weight.data(), b = bias.data();
  std::vector<Real> out(t * ch);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t c = 0; c < ch; ++c) {
      Real acc = b[c];
      for (std::size_t j = 0; j < k; ++j) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(j) - half;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(t)) continue;
        acc += w[j * ch + c] * in[static_cast<std::size_t>(src) * ch + c];
      }
      out[i * ch + c] = acc;
    }
  }
  return make_result("depthwise_conv1d", {t, ch}, std::move(out), {x, weight, bias},
                     [x, weight, bias, t, ch, k, half](const auto& g) {
                       auto in = x.data(), w = weight.data();
                       auto* gx = grad_of(x);
                       auto* gw = grad_of(weight);
                       auto* gb = grad_of(bias);
                       for (std::size_t i = 0; i < t; ++i) {
                         for (std::size_t c = 0; c < ch; ++c) {
                           const Real go = g[i * ch + c];
                           if (gb) (*gb)[c] += go;
                           for (std::size_t j = 0; j < k; ++j) {
                             const std::ptrdiff_t src =
                                 static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(j) - half;
                             if (src < 0 || src >= static_cast<std::ptrdiff_t>(t)) continue;
                             const std::size_t s = static_cast<std::size_t>(src) * ch + c;
                             if (gw) (*gw)[j * ch + c] += go * in[s];
                             if (gx) (*gx)[s] += go * w[j * ch + c];
                           }
                         }
                       }
                     });
}

Tensor outer_add_rows(const Tensor& a, const Tensor& b) {
  require_matrix(a, "outer_add_rows");
  require_matrix(b, "outer_add_rows");
  require(a.cols() == b.cols(), "outer_add_rows: width mismatch");
  const std::size_t ta = a.rows(), tb = b.rows(), n = a.cols();
  auto da = a.data(), db = b.data();
  std::vector<Real> out(ta * tb * n);
  for (std::size_t i = 0; i < ta; ++i)
    for (std::size_t j = 0; j < tb; ++j)
      for (std::size_t c = 0; c < n; ++c) out[(i * tb + j) * n + c] = da[i * n + c] + db[j * n + c];
  return make_result("outer_add_rows", {ta * tb, n}, std::move(out), {a, b}, [a, b, ta, tb, n](const auto& g) {
    auto* ga = grad_of(a);
    auto* gb = grad_of(b);
    for (std::size_t i = 0; i < ta; ++i)
      for (std::size_t j = 0; j < tb; ++j)
        for (std::size_t c = 0; c < n; ++c) {
          const Real v = g[(i * tb + j) * n + c];
          if (ga) (*ga)[i * n + c] += v;
          if (gb) (*gb)[j * n + c] += v;
        }
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets,
                     std::span<const std::uint8_t> ignore) {
  require_matrix(logits, "cross_entropy");
  const std::size_t n = logits.rows(), v = logits.cols();
  require(targets.size() == n, "cross_entropy: target count does not match rows");
  require(ignore.empty() || ignore.size() == n, "cross_entropy: ignore flag count does not match rows");
  std::size_t active = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ignore.empty() && ignore[i]) continue;
    require(targets[i] < v, "cross_entropy: target " + std::to_string(targets[i]) + " outside vocabulary");
    ++active;
  }
  require(active > 0, "cross_entropy: every position is ignored");

  auto in = logits.data();
  std::vector<Real> probs(in.size(), 0.0);
  Real loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ignore.empty() && ignore[i]) continue;
    const Real* row = in.data() + i * v;
    const Real mx = *std::max_element(row, row + v);
    Real total = 0.0;
    for (std::size_t c = 0; c < v; ++c) total += probs[i * v + c] = std::exp(row[c] - mx);
    for (std::size_t c = 0; c < v; ++c) probs[i * v + c] /= total;
    loss -= row[targets[i]] - mx - std::log(total);
  }
  const Real denom = static_cast<Real>(active);
  std::vector<std::size_t> tg(targets.begin(), targets.end());
  std::vector<std::uint8_t> skip(n, 0);
  if (!ignore.empty()) std::copy(ignore.begin(), ignore.end(), skip.begin());
  return make_result("cross_entropy", {}, {loss / denom}, {logits},
                     [logits, probs = std::move(probs), tg = std::move(tg), skip = std::move(skip), v,
                      denom](const auto& g) {
                       auto* gl = grad_of(logits);
                       if (!gl) return;
                       for (std::size_t i = 0; i < tg.size(); ++i) {
                         if (skip[i]) continue;
                         const Real* p = probs.data() + i * v;
                         for (std::size_t c = 0; c < v; ++c) {
                           const Real target = c == tg[i] ? 1.0 : 0.0;
                           (*gl)[i * v + c] += g[0] * (p[c] - target) / denom;
                         }
                       }
                     });
}

Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                            std::vector<Tensor>* weights) {
  require_matrix(q, "attention");
  require_matrix(k, "attention");
  require_matrix(v, "attention");
  const std::size_t d = q.cols();
  require(heads >= 1 && d % heads == 0,
          "attention: model dim " + std::to_string(d) + " not divisible by " + std::to_string(heads) + " heads");
  require(k.cols() == d && v.cols() == d, "attention: query/key/value widths differ");
  require(k.rows() == v.rows() && k.rows() >= 1, "attention: keys and values must have equal nonzero length");
  const std::size_t dh = d / heads;
  const Real inv_sqrt = 1.0 / std::sqrt(static_cast<Real>(dh));
  std::vector<Tensor> outputs;
  outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor qh = heads == 1 ? q : slice_cols(q, h * dh, (h + 1) * dh);
    const Tensor kh = heads == 1 ? k : slice_cols(k, h * dh, (h + 1) * dh);
    const Tensor vh = heads == 1 ? v : slice_cols(v, h * dh, (h + 1) * dh);
    Tensor attn = softmax(scale(matmul(qh, transpose(kh)), inv_sqrt), -1);
    if (weights) weights->push_back(attn);
    outputs.push_back(matmul(attn, vh));
  }
  return heads == 1 ? outputs.front() : concat_cols(outputs);
}

}  // namespace envasr
