// voxgrade/evaluation.h

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

#ifndef VOXGRADE_EVALUATION_H_
#define VOXGRADE_EVALUATION_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "voxgrade/metrics.h"
#include "voxgrade/trainer.h"

namespace voxgrade {

struct Prediction {
  std::string utterance_id, patient_id;
  std::vector<double> output;  // scores, or class probabilities for grade3
  std::vector<double> target;
  std::size_t predicted_class = 0;
  std::size_t true_class = 0;
};

std::vector<Prediction> predict(const ModelParams<float>& params,
                                const std::vector<Example>& examples);

// Indicator names of a task's outputs ("G".."S", or "grade3").
std::vector<std::string> task_indicators(Task task);

struct EvaluationReport {
  Task task = Task::kGrbasSingle;
  std::vector<std::string> indicators;
  // Regression tasks: one entry per indicator.
  std::vector<RegressionMetrics> utterance, patient;
  // grade3 only.
  std::optional<ClassificationReport> utterance_classes, patient_classes;
};

/// Utterance-level metrics, then patient-level metrics after averaging
/// (regression) or tie-broken mode (grade3) per patient.
EvaluationReport evaluate(const std::vector<Prediction>& predictions, Task task);
void write_evaluation(std::ostream& os, const EvaluationReport& report);

// Utterance-level scatter rows; grade3 rows carry class indices.
std::vector<ScatterRow> scatter_rows(const std::vector<Prediction>& predictions, Task task);
// Patient-level rows (utterance_id = patient id) aggregated per indicator.
std::vector<ScatterRow> patient_scatter_rows(const std::vector<ScatterRow>& rows);

}  // namespace voxgrade

#endif  // VOXGRADE_EVALUATION_H_
