// voxgrade/src/grad_check.cc

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

#include "voxgrade/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace voxgrade {

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << (passed ? "pass" : "FAIL") << " checked=" << entries.size()
     << " max_rel_error=" << max_rel_error << " nonfinite=" << nonfinite
     << " straddled=" << straddled;
  return os.str();
}

GradCheckReport grad_check(const DualFunction& f,
                           const std::vector<Tensor<float>>& point, double rtol,
                           const GradCheckOptions& options) {
  GradCheckReport report;

  // Analytic gradient on fresh leaves so the caller's tensors are untouched.
  std::vector<Tensor<float>> leaves;
  for (const auto& p : point) leaves.push_back(Tensor<float>::from(
      p.shape(), std::vector<float>(p.data().begin(), p.data().end()), true));
  {
    Graph<float> graph;
    Tensor<float> value;
    {
      auto scope = graph.activate();
      value = f.f32(leaves);
    }
    if (graph.contains(value)) graph.backward(value);
  }

  std::vector<Tensor<double>> probe;
  for (const auto& p : point) probe.push_back(p.cast<double>());

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t t = 0; t < point.size(); ++t)
    for (std::size_t i = 0; i < point[t].numel(); ++i) coords.emplace_back(t, i);
  if (options.max_coords > 0 && coords.size() > options.max_coords) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.max_coords);
    std::sort(coords.begin(), coords.end());
  }

  auto evaluate = [&](std::vector<int>* signature) {
    BranchMonitor monitor;
    double v = f.f64(probe).item();
    *signature = monitor.signature();
    return v;
  };

  for (auto [t, i] : coords) {
    double* x = probe[t].mutable_data().data() + i;
    const double saved = *x;
    std::vector<int> sig_plus, sig_minus;
    *x = saved + options.step;
    const double f_plus = evaluate(&sig_plus);
    *x = saved - options.step;
    const double f_minus = evaluate(&sig_minus);
    *x = saved;

    GradCheckEntry e;
    e.tensor = t;
    e.index = i;
    e.analytic = leaves[t].has_grad() ? leaves[t].grad()[i] : 0.0;
    e.numeric = (f_plus - f_minus) / (2.0 * options.step);
    if (sig_plus != sig_minus) {
      ++report.straddled;
      continue;
    }
    if (!std::isfinite(e.analytic) || !std::isfinite(e.numeric)) {
      ++report.nonfinite;
      e.rel_error = std::numeric_limits<double>::infinity();
    } else {
      const double denom = std::max({std::abs(e.analytic), std::abs(e.numeric),
                                     options.denominator_floor});
      e.rel_error = std::abs(e.analytic - e.numeric) / denom;
    }
    report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
    report.entries.push_back(e);
  }
  report.passed = report.nonfinite == 0 && report.max_rel_error < rtol &&
                  (coords.empty() || !report.entries.empty());
  return report;
}

GradCheckReport grad_check(const DualFunction& f, const Tensor<float>& point,
                           double rtol, const GradCheckOptions& options) {
  return grad_check(f, std::vector<Tensor<float>>{point}, rtol, options);
}

}  // namespace voxgrade
