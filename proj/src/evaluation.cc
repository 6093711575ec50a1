// voxgrade/src/evaluation.cc

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

#include "voxgrade/evaluation.h"

#include <ostream>
#include <stdexcept>

#include "voxgrade/objectives.h"

namespace voxgrade {

std::vector<Prediction> predict(const ModelParams<float>& params,
                                const std::vector<Example>& examples) {
  std::vector<Prediction> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    const Tensor<float> y = model_forward(params, ex.input);
    Prediction p;
    p.utterance_id = ex.utterance_id;
    p.patient_id = ex.patient_id;
    p.output.assign(y.data().begin(), y.data().end());
    p.target = ex.target;
    p.true_class = ex.true_class;
    if (params.config.task == Task::kGrade3) p.predicted_class = predicted_class(y.data());
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::string> task_indicators(Task task) {
  if (task == Task::kGrade3) return {"grade3"};
  std::vector<std::string> names;
  for (std::size_t k = 0; k < output_dim(task); ++k) names.emplace_back(kGrbasNames[k]);
  return names;
}

EvaluationReport evaluate(const std::vector<Prediction>& predictions, Task task) {
  if (predictions.empty()) throw std::invalid_argument("evaluate: no predictions");
  EvaluationReport r;
  r.task = task;
  r.indicators = task_indicators(task);
  std::vector<std::string> patients;
  for (const auto& p : predictions) patients.push_back(p.patient_id);
  const auto groups = group_by(patients);

  if (task == Task::kGrade3) {
    std::vector<std::size_t> pred, truth, patient_pred, patient_truth;
    for (const auto& p : predictions) {
      pred.push_back(p.predicted_class);
      truth.push_back(p.true_class);
    }
    for (const auto& g : groups) {
      std::vector<std::size_t> classes;
      for (std::size_t i : g.members) classes.push_back(pred[i]);
      patient_pred.push_back(aggregate_classification(classes));
      patient_truth.push_back(truth[g.members.front()]);
    }
    r.utterance_classes = classification_metrics(pred, truth);
    r.patient_classes = classification_metrics(patient_pred, patient_truth);
    return r;
  }

  for (std::size_t k = 0; k < r.indicators.size(); ++k) {
    std::vector<double> pred, label, patient_pred, patient_label;
    for (const auto& p : predictions) {
      if (p.output.size() != r.indicators.size() || p.target.size() != r.indicators.size())
        throw std::invalid_argument("evaluate: prediction for '" + p.utterance_id +
                                    "' does not match task " + task_name(task));
      pred.push_back(p.output[k]);
      label.push_back(p.target[k]);
    }
    for (const auto& g : groups) {
      std::vector<double> gp, gl;
      for (std::size_t i : g.members) {
        gp.push_back(pred[i]);
        gl.push_back(label[i]);
      }
      patient_pred.push_back(aggregate_regression(gp));
      patient_label.push_back(aggregate_regression(gl));
    }
    r.utterance.push_back(regression_metrics(pred, label));
    r.patient.push_back(regression_metrics(patient_pred, patient_label));
  }
  return r;
}

void write_evaluation(std::ostream& os, const EvaluationReport& r) {
  os << "task=" << task_name(r.task) << '\n';
  if (r.task == Task::kGrade3) {
    write_report(os, "utterance.", *r.utterance_classes);
    write_report(os, "patient.", *r.patient_classes);
    return;
  }
  for (std::size_t k = 0; k < r.indicators.size(); ++k)
    write_report(os, "utterance." + r.indicators[k] + ".", r.utterance[k]);
  for (std::size_t k = 0; k < r.indicators.size(); ++k)
    write_report(os, "patient." + r.indicators[k] + ".", r.patient[k]);
}

std::vector<ScatterRow> scatter_rows(const std::vector<Prediction>& predictions, Task task) {
  const auto names = task_indicators(task);
  std::vector<ScatterRow> rows;
  for (const auto& p : predictions) {
    if (task == Task::kGrade3) {
      rows.push_back({p.utterance_id, p.patient_id, names[0],
                      static_cast<double>(p.predicted_class), static_cast<double>(p.true_class)});
      continue;
    }
    for (std::size_t k = 0; k < names.size(); ++k)
      rows.push_back({p.utterance_id, p.patient_id, names[k], p.output.at(k), p.target.at(k)});
  }
  return rows;
}

std::vector<ScatterRow> patient_scatter_rows(const std::vector<ScatterRow>& rows) {
  std::vector<std::string> keys;
  for (const auto& r : rows) keys.push_back(r.patient_id + '\n' + r.indicator);
  std::vector<ScatterRow> out;
  for (const auto& g : group_by(keys)) {
    const ScatterRow& first = rows[g.members.front()];
    ScatterRow agg{first.patient_id, first.patient_id, first.indicator, 0.0, 0.0};
    if (first.indicator == "grade3") {
      std::vector<std::size_t> classes;
      for (std::size_t i : g.members) classes.push_back(static_cast<std::size_t>(rows[i].prediction));
      agg.prediction = static_cast<double>(aggregate_classification(classes));
      agg.label = first.label;
    } else {
      std::vector<double> p, l;
      for (std::size_t i : g.members) {
        p.push_back(rows[i].prediction);
        l.push_back(rows[i].label);
      }
      agg.prediction = aggregate_regression(p);
      agg.label = aggregate_regression(l);
    }
    out.push_back(agg);
  }
  return out;
}

}  // namespace voxgrade
