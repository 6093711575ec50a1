// voxgrade/src/metrics.cc

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

#include "voxgrade/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace voxgrade {

std::size_t bin_grade(double score) {
  if (!(score >= 0.0 && score <= 3.0))
    throw std::invalid_argument("bin_grade: score " + format_double(score) +
                                " outside [0,3]");
  if (score <= 1.0) return 0;
  if (score <= 2.0) return 1;
  return 2;
}

const char* grade_class_name(std::size_t cls) {
  static const char* const kNames[] = {"mild", "moderate", "severe"};
  if (cls >= kNumGradeClasses)
    throw std::invalid_argument("grade class " + std::to_string(cls) + " not in {0,1,2}");
  return kNames[cls];
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    // positions i..j (0-based) share ranks i+1..j+1
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) + ": length mismatch " +
                                std::to_string(a) + " vs " + std::to_string(b));
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

}  // namespace

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size(), "pearson");
  if (x.size() < 2) return std::nullopt;
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size(), "spearman");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  return pearson(rx, ry);
}

RegressionMetrics regression_metrics(std::span<const double> preds,
                                     std::span<const double> labels) {
  require_same_length(preds.size(), labels.size(), "regression_metrics");
  if (preds.empty()) throw std::invalid_argument("regression_metrics: empty input");
  RegressionMetrics m;
  m.n = preds.size();
  std::vector<double> sq(m.n);
  for (std::size_t i = 0; i < m.n; ++i) {
    const double e = preds[i] - labels[i];
    sq[i] = e * e;
  }
  m.mse = mean_of(sq);
  double var = 0.0;
  for (double s : sq) var += (s - m.mse) * (s - m.mse);
  m.mse_std = std::sqrt(var / static_cast<double>(m.n));
  m.pcc = pearson(preds, labels);
  m.srcc = spearman(preds, labels);
  return m;
}

ClassificationReport classification_metrics(std::span<const std::size_t> preds,
                                            std::span<const std::size_t> truths) {
  require_same_length(preds.size(), truths.size(), "classification_metrics");
  if (preds.empty()) throw std::invalid_argument("classification_metrics: empty input");
  ClassificationReport r;
  r.n = preds.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < r.n; ++i) {
    if (preds[i] >= kNumGradeClasses || truths[i] >= kNumGradeClasses)
      throw std::invalid_argument("classification_metrics: class outside {0,1,2} at index " +
                                  std::to_string(i));
    ++r.confusion[truths[i]][preds[i]];
    if (preds[i] == truths[i]) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);

  auto ratio = [&](std::size_t num, std::size_t den) {
    if (den == 0) {
      r.zero_division = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  for (std::size_t k = 0; k < kNumGradeClasses; ++k) {
    std::size_t tp = r.confusion[k][k], predicted = 0, support = 0;
    for (std::size_t j = 0; j < kNumGradeClasses; ++j) {
      predicted += r.confusion[j][k];
      support += r.confusion[k][j];
    }
    ClassScores& s = r.per_class[k];
    s.support = support;
    s.precision = ratio(tp, predicted);
    s.recall = ratio(tp, support);
    const double pr = s.precision + s.recall;
    if (pr == 0.0) {
      r.zero_division = true;
      s.f1 = 0.0;
    } else {
      s.f1 = 2.0 * s.precision * s.recall / pr;
    }
  }
  for (const ClassScores& s : r.per_class) {
    const double w = static_cast<double>(s.support) / static_cast<double>(r.n);
    r.macro.precision += s.precision / kNumGradeClasses;
    r.macro.recall += s.recall / kNumGradeClasses;
    r.macro.f1 += s.f1 / kNumGradeClasses;
    r.weighted.precision += w * s.precision;
    r.weighted.recall += w * s.recall;
    r.weighted.f1 += w * s.f1;
  }
  r.macro.support = r.weighted.support = r.n;
  return r;
}

double aggregate_regression(std::span<const double> utterance_preds) {
  if (utterance_preds.empty())
    throw std::invalid_argument("aggregate_regression: empty patient group");
  return mean_of(utterance_preds);
}

std::vector<double> aggregate_regression(const std::vector<std::vector<double>>& utterance_preds) {
  if (utterance_preds.empty())
    throw std::invalid_argument("aggregate_regression: empty patient group");
  std::vector<double> out(utterance_preds[0].size(), 0.0);
  for (const auto& p : utterance_preds) {
    require_same_length(p.size(), out.size(), "aggregate_regression");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += p[k];
  }
  for (double& v : out) v /= static_cast<double>(utterance_preds.size());
  return out;
}

std::size_t aggregate_classification(std::span<const std::size_t> utterance_classes) {
  if (utterance_classes.empty())
    throw std::invalid_argument("aggregate_classification: empty patient group");
  std::map<std::size_t, std::size_t> counts;
  double sum = 0.0;
  for (std::size_t c : utterance_classes) {
    ++counts[c];
    sum += static_cast<double>(c);
  }
  const double mean = sum / static_cast<double>(utterance_classes.size());
  std::size_t top = 0;
  for (const auto& [c, n] : counts) top = std::max(top, n);
  std::size_t best = 0;
  double best_dist = INFINITY;
  for (const auto& [c, n] : counts) {  // ascending class order
    if (n != top) continue;
    const double d = std::abs(static_cast<double>(c) - mean);
    if (d < best_dist) {
      best = c;
      best_dist = d;
    }
  }
  return best;
}

std::vector<Group> group_by(const std::vector<std::string>& keys) {
  std::vector<Group> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto [it, inserted] = index.emplace(keys[i], groups.size());
    if (inserted) groups.push_back({keys[i], {}});
    groups[it->second].members.push_back(i);
  }
  return groups;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : "undefined";
}

}  // namespace

void write_report(std::ostream& os, const std::string& prefix, const RegressionMetrics& m) {
  os << prefix << "n=" << m.n << '\n'
     << prefix << "mse=" << format_double(m.mse) << '\n'
     << prefix << "mse_std=" << format_double(m.mse_std) << '\n'
     << prefix << "pcc=" << format_optional(m.pcc) << '\n'
     << prefix << "srcc=" << format_optional(m.srcc) << '\n';
}

void write_report(std::ostream& os, const std::string& prefix,
                  const ClassificationReport& r) {
  os << prefix << "n=" << r.n << '\n'
     << prefix << "accuracy=" << format_double(r.accuracy) << '\n';
  auto scores = [&](const std::string& name, const ClassScores& s) {
    os << prefix << name << ".precision=" << format_double(s.precision) << '\n'
       << prefix << name << ".recall=" << format_double(s.recall) << '\n'
       << prefix << name << ".f1=" << format_double(s.f1) << '\n'
       << prefix << name << ".support=" << s.support << '\n';
  };
  for (std::size_t k = 0; k < kNumGradeClasses; ++k) scores(grade_class_name(k), r.per_class[k]);
  scores("macro", r.macro);
  scores("weighted", r.weighted);
  for (std::size_t t = 0; t < kNumGradeClasses; ++t) {
    os << prefix << "confusion." << grade_class_name(t) << '=';
    for (std::size_t p = 0; p < kNumGradeClasses; ++p) os << (p ? "," : "") << r.confusion[t][p];
    os << '\n';
  }
  os << prefix << "zero_division=" << (r.zero_division ? "true" : "false") << '\n';
}

namespace {

constexpr const char* kScatterHeader = "utterance_id,patient_id,indicator,prediction,label";

void check_csv_field(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos)
    throw std::invalid_argument("scatter csv: field '" + s + "' contains a separator");
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("scatter csv line " + std::to_string(line) + ": bad number '" +
                             s + "'");
  return v;
}

}  // namespace

void write_scatter_csv(std::ostream& os, const std::vector<ScatterRow>& rows) {
  os << kScatterHeader << '\n';
  for (const auto& r : rows) {
    check_csv_field(r.utterance_id);
    check_csv_field(r.patient_id);
    check_csv_field(r.indicator);
    os << r.utterance_id << ',' << r.patient_id << ',' << r.indicator << ','
       << format_double(r.prediction) << ',' << format_double(r.label) << '\n';
  }
}

std::vector<ScatterRow> read_scatter_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kScatterHeader)
    throw std::runtime_error(std::string("scatter csv: expected header '") + kScatterHeader + "'");
  std::vector<ScatterRow> rows;
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 5)
      throw std::runtime_error("scatter csv line " + std::to_string(n) + ": expected 5 fields, got " +
                               std::to_string(f.size()));
    rows.push_back({f[0], f[1], f[2], parse_number(f[3], n), parse_number(f[4], n)});
  }
  return rows;
}

}  // namespace voxgrade
