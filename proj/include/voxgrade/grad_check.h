// voxgrade/grad_check.h

// Copyright 2026  The voxgrade Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VOXGRADE_GRAD_CHECK_H_
#define VOXGRADE_GRAD_CHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "voxgrade/tensor.h"

namespace voxgrade {

// A scalar-valued function of a list of tensors, available in both the 32-bit
// training precision and a 64-bit oracle precision.
struct DualFunction {
  std::function<Tensor<float>(const std::vector<Tensor<float>>&)> f32;
  std::function<Tensor<double>(const std::vector<Tensor<double>>&)> f64;
};

// Wraps a generic lambda `[](const auto& xs) { ... }` in both precisions.
template <typename F>
DualFunction make_dual(F f) {
  return DualFunction{
      [f](const std::vector<Tensor<float>>& xs) { return f(xs); },
      [f](const std::vector<Tensor<double>>& xs) { return f(xs); }};
}

struct GradCheckOptions {
  double step = 1e-3;
  // Denominator floor of the relative error, so that gradients that are zero
  // up to rounding do not count as failures.
  double denominator_floor = 1e-4;
  // 0 checks every coordinate; otherwise a seeded sample of this many.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::size_t tensor = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  std::size_t nonfinite = 0;
  // Coordinates whose central difference straddled a kink (the two probes
  // took different branches); they are excluded from max_rel_error.
  std::size_t straddled = 0;
  bool passed = false;

  std::string summary() const;
};

/// Compares the analytic gradient (32-bit autodiff) of `f` at `point` with
/// central differences evaluated on the 64-bit path.
///
/// Relative error per coordinate is |a - n| / max(|a|, |n|, floor). The check
/// passes iff every compared coordinate is finite and its error is < rtol.
GradCheckReport grad_check(const DualFunction& f,
                           const std::vector<Tensor<float>>& point, double rtol,
                           const GradCheckOptions& options = {});

GradCheckReport grad_check(const DualFunction& f, const Tensor<float>& point,
                           double rtol, const GradCheckOptions& options = {});

}  // namespace voxgrade

#endif  // VOXGRADE_GRAD_CHECK_H_
