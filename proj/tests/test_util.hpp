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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "envasr/ops.hpp"
#include "envasr/params.hpp"
#include "envasr/tensor.hpp"

namespace envasr::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, Real lo = -1.0, Real hi = 1.0,
                            bool requires_grad = false) {
  std::uniform_real_distribution<Real> u(lo, hi);
  std::vector<Real> v(shape_numel(shape));
  for (Real& x : v) x = u(rng);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

struct GradcheckReport {
  Real max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;
};

/// Relative error with a small floor on the denominator so gradients that
/// are numerically zero compare absolutely.
inline Real rel_error(Real analytic, Real numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), Real{1e-4}});
}

/// Compares backward() of the scalar `f` against central differences for
/// every element of every input. `stride` > 1 samples every stride-th
/// element of large tensors.
inline GradcheckReport gradcheck(const std::function<Tensor()>& f, const std::vector<std::pair<std::string, Tensor>>& inputs,
                                 Real h = 1e-5, std::size_t stride = 1) {
  for (const auto& [name, t] : inputs) Tensor(t).zero_grad();
  f().backward();
  std::vector<std::vector<Real>> analytic;
  for (const auto& [name, t] : inputs) analytic.emplace_back(t.grad().begin(), t.grad().end());

  GradcheckReport report;
  NoGradGuard no_grad;
  for (std::size_t p = 0; p < inputs.size(); ++p) {
    Tensor t = inputs[p].second;
    auto values = t.mutable_data();
    for (std::size_t i = 0; i < values.size(); i += stride) {
      const Real saved = values[i];
      values[i] = saved + h;
      const Real up = f().item();
      values[i] = saved - h;
      const Real down = f().item();
      values[i] = saved;
      const Real err = rel_error(analytic[p][i], (up - down) / (2.0 * h));
      ++report.checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst = inputs[p].first + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

inline std::vector<std::pair<std::string, Tensor>> all_parameters(const ParameterSet& params) {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& [name, t] : params) out.emplace_back(name, t);
  return out;
}

/// Fresh directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("envasr_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace envasr::testing
