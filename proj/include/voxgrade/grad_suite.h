// voxgrade/grad_suite.h

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

#ifndef VOXGRADE_GRAD_SUITE_H_
#define VOXGRADE_GRAD_SUITE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "voxgrade/grad_check.h"
#include "voxgrade/model.h"

namespace voxgrade {

struct GradSuiteOptions {
  std::uint64_t seed = 7;
  std::size_t points_per_primitive = 100;
  std::size_t pipeline_cases = 100;
  double rtol = 1e-3;
  GradCheckOptions primitive_check;
  // End-to-end cases use a finer step.
  GradCheckOptions pipeline_check{.step = 1e-5};
};

struct GradSuiteCase {
  std::string name;
  std::size_t point = 0;
  GradCheckReport report;
};

struct GradSuiteResult {
  std::vector<GradSuiteCase> cases;
  std::size_t failures = 0;
  double seconds = 0.0;
  bool passed() const { return failures == 0 && !cases.empty(); }
};

// Names of the primitive checks run by the suite.
std::vector<std::string> grad_suite_primitives();

// Tiny model used for end-to-end gradient checks.
ModelConfig toy_pipeline_config(Task task, std::uint64_t seed);

/// Every differentiable primitive at `points_per_primitive` seeded random
/// points (drawn away from kinks and poles), then the full toy pipeline
/// (toy encoders -> fusion -> head -> loss) for `pipeline_cases` seeds
/// cycling through the three tasks.
GradSuiteResult run_grad_suite(const GradSuiteOptions& options = {});

}  // namespace voxgrade

#endif  // VOXGRADE_GRAD_SUITE_H_
