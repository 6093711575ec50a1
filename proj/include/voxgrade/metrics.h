// voxgrade/metrics.h

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

#ifndef VOXGRADE_METRICS_H_
#define VOXGRADE_METRICS_H_

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace voxgrade {

inline constexpr std::size_t kNumGradeClasses = 3;

// Severity class of a [0,3] score: 0 mild [0,1], 1 moderate (1,2], 2 severe (2,3].
std::size_t bin_grade(double score);
const char* grade_class_name(std::size_t cls);

// Average (1-based) ranks; tied values share the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> x);

// Sample Pearson correlation; nullopt when n < 2 or either side is constant.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
// Pearson correlation of average ranks.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

struct RegressionMetrics {
  std::size_t n = 0;
  double mse = 0.0;
  // Standard deviation of the per-sample squared errors.
  double mse_std = 0.0;
  std::optional<double> pcc, srcc;
};

RegressionMetrics regression_metrics(std::span<const double> preds,
                                     std::span<const double> labels);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ClassificationReport {
  std::size_t n = 0;
  // confusion[true][predicted]
  std::array<std::array<std::size_t, kNumGradeClasses>, kNumGradeClasses> confusion{};
  std::array<ClassScores, kNumGradeClasses> per_class{};
  ClassScores macro, weighted;
  double accuracy = 0.0;
  // Set when some precision/recall/F1 had a zero denominator and was scored 0.
  bool zero_division = false;
};

ClassificationReport classification_metrics(std::span<const std::size_t> preds,
                                            std::span<const std::size_t> truths);

// Patient-level regression prediction: the mean of the utterance predictions.
double aggregate_regression(std::span<const double> utterance_preds);
std::vector<double> aggregate_regression(const std::vector<std::vector<double>>& utterance_preds);

/// Patient-level class: the mode of the utterance classes. Among several
/// modes the one nearest to the mean class wins, then the lowest index.
std::size_t aggregate_classification(std::span<const std::size_t> utterance_classes);

/// Groups item indices by key, in order of first appearance.
struct Group {
  std::string key;
  std::vector<std::size_t> members;
};
std::vector<Group> group_by(const std::vector<std::string>& keys);

// key=value lines, keys prefixed with `prefix`.
void write_report(std::ostream& os, const std::string& prefix, const RegressionMetrics& m);
void write_report(std::ostream& os, const std::string& prefix,
                  const ClassificationReport& r);

struct ScatterRow {
  std::string utterance_id, patient_id, indicator;
  double prediction = 0.0;
  double label = 0.0;
};

void write_scatter_csv(std::ostream& os, const std::vector<ScatterRow>& rows);
std::vector<ScatterRow> read_scatter_csv(std::istream& is);

// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

}  // namespace voxgrade

#endif  // VOXGRADE_METRICS_H_
