// voxgrade/tests/acceptance.cc

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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/metric_oracles.h"
#include "voxgrade/cli.h"
#include "voxgrade/datasets.h"
#include "voxgrade/evaluation.h"
#include "voxgrade/fusion.h"
#include "voxgrade/grad_suite.h"
#include "voxgrade/metrics.h"
#include "voxgrade/objectives.h"
#include "voxgrade/trainer.h"

namespace fs = std::filesystem;
using namespace voxgrade;

namespace {

int failures = 0;

void report(const std::string& id, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << id << ": " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Every regular file under a and b, compared byte for byte by relative path.
bool same_tree(const fs::path& a, const fs::path& b, std::size_t* files) {
  std::vector<fs::path> ra, rb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) ra.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) rb.push_back(fs::relative(e.path(), b));
  std::sort(ra.begin(), ra.end());
  std::sort(rb.begin(), rb.end());
  *files = ra.size();
  if (ra != rb || ra.empty()) return false;
  for (const auto& r : ra)
    if (slurp(a / r) != slurp(b / r)) return false;
  return true;
}

Tensor<double> probs(std::vector<double> p) {
  const Shape s{p.size()};
  return Tensor<double>::from(s, std::move(p));
}

void gradient_suite() {
  const GradSuiteResult r = run_grad_suite();
  std::size_t pipeline = 0;
  for (const auto& c : r.cases) pipeline += c.name.rfind("pipeline/", 0) == 0;
  const std::size_t primitives = r.cases.size() - pipeline;
  std::ostringstream d;
  d << primitives << " primitive cases (" << grad_suite_primitives().size() << " primitives), "
    << pipeline << " pipeline cases, " << r.failures << " failures, "
    << format_double(std::round(r.seconds * 10) / 10) << " s";
  report("gradient-suite", r.passed() && pipeline >= 100 &&
                               primitives >= 100 * grad_suite_primitives().size() &&
                               r.seconds < 60.0,
         d.str());
}

void scdw_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(1e-3, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p{u(rng), u(rng), u(rng)};
    const double s = p[0] + p[1] + p[2];
    for (auto& v : p) v /= s;
    const std::size_t c = rng() % 3;
    worst = std::max(worst, std::abs(scdw_ce_loss(probs(p), c).item() - oracle::scdw(p, c)));
  }
  const bool ex1 = scdw_ce_loss(probs({0.5, 0.3, 0.2}), 0).item() == 0.0;
  const bool ex2 = scdw_ce_loss(probs({0.7, 0.2, 0.1}), 2).item() == -std::log(0.1) * 2.0 &&
                   std::abs(scdw_ce_loss(probs({0.7, 0.2, 0.1}), 2).item() - 4.6052) < 5e-5;
  const bool ex3 = scdw_ce_loss(probs({0.1, 0.8, 0.1}), 0).item() == -std::log(0.1) * 1.0 &&
                   std::abs(scdw_ce_loss(probs({0.1, 0.8, 0.1}), 0).item() - 2.3026) < 5e-5;
  std::ostringstream d;
  d << "200 random cases max |diff| " << worst << "; tabulated examples " << ex1 << ex2 << ex3;
  report("scdw-oracle", worst <= 1e-9 && ex1 && ex2 && ex3, d.str());
}

void metric_oracles() {
  std::mt19937_64 rng(99);
  double worst_p = 0.0, worst_s = 0.0;
  std::size_t undefined_mismatch = 0, tied = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<double> x(n), y(n);
    // Even iterations draw small integers (tie-heavy).
    const bool ties = t % 2 == 0;
    std::normal_distribution<double> g(0.0, 3.0);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = ties ? static_cast<double>(rng() % 5) : g(rng);
      y[i] = ties ? static_cast<double>(rng() % 4) : 0.5 * x[i] + g(rng);
    }
    tied += ties;
    const auto p = pearson(x, y), bp = oracle::brute_pearson(x, y);
    const auto s = spearman(x, y), bs = oracle::brute_spearman(x, y);
    if (p.has_value() != bp.has_value() || s.has_value() != bs.has_value()) {
      ++undefined_mismatch;
      continue;
    }
    if (p) worst_p = std::max(worst_p, std::abs(*p - *bp));
    if (s) worst_s = std::max(worst_s, std::abs(*s - *bs));
  }
  std::ostringstream d;
  d << "500 vectors (" << tied << " tie-heavy): max |PCC diff| " << worst_p << ", max |SRCC diff| "
    << worst_s << ", undefined mismatches " << undefined_mismatch;
  report("metric-oracles/correlation", worst_p <= 1e-9 && worst_s <= 1e-9 && undefined_mismatch == 0,
         d.str());

  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<std::size_t> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rng() % 3;
      truth[i] = rng() % 3;
    }
    const auto r = classification_metrics(pred, truth);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += pred[i] == truth[i];
    worst = std::max(worst, std::abs(r.weighted.recall - r.accuracy));
    worst = std::max(worst, std::abs(r.accuracy - static_cast<double>(hits) / n));
  }
  std::ostringstream e;
  e << "200 sets: max |weighted recall - accuracy| " << worst;
  report("metric-oracles/weighted-recall", worst <= 1e-12, e.str());
}

void aggregation() {
  const std::vector<std::size_t> a{0, 0, 1, 1, 2}, b{0, 0, 2, 2}, c{2, 2, 0};
  const bool hand = aggregate_classification(a) == 1 && aggregate_classification(b) == 0 &&
                    aggregate_classification(c) == 2;
  std::mt19937_64 rng(5);
  std::size_t broken = 0, broken_mean = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t cls = rng() % 3, n = 1 + rng() % 20;
    const std::vector<std::size_t> g(n, cls);
    broken += aggregate_classification(g) != cls;
    const double v = std::uniform_real_distribution<double>(0, 3)(rng);
    const std::vector<double> r(n, v);
    broken_mean += std::abs(aggregate_regression(r) - v) > 1e-12 * std::max(1.0, v);
  }
  std::ostringstream d;
  d << "[0,0,1,1,2]->" << aggregate_classification(a) << " [0,0,2,2]->" << aggregate_classification(b)
    << " [2,2,0]->" << aggregate_classification(c) << "; unanimity violations " << broken
    << "/1000 (class), " << broken_mean << "/1000 (mean)";
  report("aggregation", hand && broken == 0 && broken_mean == 0, d.str());
}

void grade_binning() {
  const std::string one = grade_class_name(bin_grade(1.0)), two = grade_class_name(bin_grade(2.0));
  const bool ok = one == "mild" && two == "moderate" &&
                  grade_class_name(bin_grade(std::nextafter(1.0, 2.0))) == std::string("moderate") &&
                  grade_class_name(bin_grade(std::nextafter(2.0, 3.0))) == std::string("severe") &&
                  grade_class_name(bin_grade(0.0)) == std::string("mild") &&
                  grade_class_name(bin_grade(3.0)) == std::string("severe");
  report("grade-binning", ok, "1.0->" + one + ", 2.0->" + two);
}

void schedule_trace() {
  auto str = [](const std::vector<std::size_t>& v) {
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + "}";
  };
  std::vector<double> h1{1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3}, h2{1, 1, 1, 1, 1},
      h3{1.0, 1.1, 0.9, 1.1, 1.1, 1.1, 1.1};
  const auto e1 = plateau_schedule(h1), e2 = plateau_schedule(h2), e3 = plateau_schedule(h3);
  bool ok = e1.empty() && e2 == std::vector<std::size_t>{5} && e3 == std::vector<std::size_t>{7};

  // lr after every epoch equals 1e-4 * 0.5^h on random histories.
  std::mt19937_64 rng(8);
  std::size_t epochs = 0, max_h = 0;
  bool lr_ok = true;
  for (int run = 0; run < 100; ++run) {
    PlateauScheduler s(1e-4, 0.5, 4);
    double level = 1.0;
    for (int e = 0; e < 60; ++e, ++epochs) {
      if (rng() % 4 == 0) level *= 0.9;
      s.observe(level + 0.01 * static_cast<double>(rng() % 3));
      lr_ok = lr_ok && s.lr() == 1e-4 * std::pow(0.5, static_cast<double>(s.halvings()));
      max_h = std::max(max_h, s.halvings());
    }
  }
  std::ostringstream d;
  d << "improving->" << str(e1) << " flat->" << str(e2) << " reset->" << str(e3) << "; lr=1e-4*0.5^h on "
    << epochs << " epochs (up to h=" << max_h << ")";
  report("schedule-trace", ok && lr_ok, d.str());
}

bool all_finite(ModelParams<float>& p) {
  bool ok = true;
  p.visit([&](const std::string&, Tensor<float>& t) {
    for (float v : t.data()) ok = ok && std::isfinite(v);
  });
  return ok;
}

double train_mse(const ModelParams<float>& params, const std::vector<Example>& set) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& p : predict(params, set))
    for (std::size_t k = 0; k < p.output.size(); ++k, ++n) s += std::pow(p.output[k] - p.target[k], 2);
  return s / static_cast<double>(n);
}

// Mirrors `voxgrade train --seed 0 --lr 0.01 --hidden 32 --toy-layers 4 --val-split train`.
ModelConfig sanity_model() {
  ModelConfig c;
  c.hidden = 32;
  c.toy.n_layers = 4;
  c.toy.input_dim = c.n_mels;
  c.toy.seed = 1000;
  c.seed = 0;
  return c;
}

void overfit_sanity(const fs::path& root) {
  const bool synth_ok = cli({"--workdir", root.string(), "synth", "--out-dir", "sanity", "--patients",
                             "4", "--utt", "4"}) == 0;
  const Manifest m = read_manifest(root / "sanity/manifest.tsv");
  const auto t0 = std::chrono::steady_clock::now();
  const ModelConfig cfg = sanity_model();
  const auto examples = make_examples(m.select(Split::kTrain), cfg, root / "sanity");
  ModelParams<float> params = init_params(cfg);
  TrainConfig tc;
  tc.lr0 = 0.01;
  tc.max_epochs = 200;
  tc.task = cfg.task;
  tc.loss = default_loss(cfg.task);

  std::size_t steps = 0, weight_violations = 0, nan_steps = 0;
  double worst_sum = 0.0;
  std::size_t reached = 0;
  double final_mse = 0.0;
  bool lr_ok = true;
  const auto result = train(
      params, examples, examples, tc,
      [&](const StepInfo& s) {
        ++steps;
        auto* p = const_cast<ModelParams<float>*>(s.params);
        for (const auto* logits : {&p->asr.layer_logits, &p->ssl.layer_logits}) {
          const Tensor<float> w = softmax(*logits, 0);
          double sum = 0.0;
          for (float v : w.data()) sum += v;
          worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
          weight_violations += std::abs(sum - 1.0) > 1e-6;
        }
        nan_steps += !all_finite(*p);
      },
      [&](const EpochRecord& r) {
        lr_ok = lr_ok && r.lr == tc.lr0 * std::pow(0.5, static_cast<double>(r.halvings));
        final_mse = train_mse(params, examples);
        if (!reached && final_mse < 0.05) reached = r.epoch;
      });
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << examples.size() << " utterances; train MSE < 0.05 first at epoch "
    << (reached ? std::to_string(reached) : std::string("never")) << ", final "
    << format_double(final_mse) << "; " << result.history.size() << " epochs in "
    << format_double(std::round(secs)) << " s; non-finite parameter steps " << nan_steps;
  report("overfit-sanity", synth_ok && examples.size() == 16 && reached > 0 && reached <= 200 &&
                               secs < 300.0 && nan_steps == 0 && lr_ok,
         d.str());
  std::ostringstream f;
  f << steps << " steps, max |sum(weights) - 1| " << worst_sum << ", violations " << weight_violations;
  report("fusion-invariants/weights-sum", steps > 0 && weight_violations == 0, f.str());
}

void zero_logit_average() {
  std::mt19937_64 rng(17);
  std::normal_distribution<float> g(0.0f, 1.0f);
  double worst = 0.0;
  for (std::size_t L : {1u, 2u, 3u, 6u, 12u}) {
    std::vector<Tensor<float>> slices;
    for (std::size_t l = 0; l < L; ++l) {
      std::vector<float> v(20 * 120);
      for (auto& x : v) x = g(rng);
      slices.push_back(Tensor<float>::from({20, 120}, std::move(v)));
    }
    const auto y = weighted_layer_sum(slices, Tensor<float>::zeros({L}));
    for (std::size_t i = 0; i < y.numel(); ++i) {
      double avg = 0.0;
      for (const auto& s : slices) avg += s.data()[i];
      worst = std::max(worst, std::abs(y.data()[i] - avg / static_cast<double>(L)));
    }
  }
  std::ostringstream d;
  d << "L in {1,2,3,6,12}: max |weighted - plain average| " << worst;
  report("fusion-invariants/zero-logits", worst <= 1e-6, d.str());
}

void determinism(const fs::path& root) {
  const std::string w = root.string();
  std::size_t nsynth = 0, nseg = 0, ntrain = 0;
  bool synth = true, seg = true, tr = true;
  for (const char* d : {"det_a", "det_b"})
    synth = synth && cli({"--workdir", w, "synth", "--out-dir", std::string(d) + "/synth",
                          "--patients", "4", "--utt", "2", "--seed", "3"}) == 0;
  synth = synth && same_tree(root / "det_a/synth", root / "det_b/synth", &nsynth);

  for (const char* d : {"det_a", "det_b"}) {
    seg = seg && cli({"--workdir", w, "synth", "--out-dir", std::string(d) + "/long", "--patients",
                      "1", "--utt", "1", "--duration", "12", "--seed", "4"}) == 0;
    seg = seg && cli({"--workdir", w, "segment", "--input", std::string(d) + "/long/audio/p000_u00.wav",
                      "--out-dir", std::string(d) + "/segments", "--seed", "6"}) == 0;
  }
  seg = seg && same_tree(root / "det_a/segments", root / "det_b/segments", &nseg);

  for (const char* d : {"det_a", "det_b"})
    tr = tr && cli({"--workdir", w, "train", "--manifest", "det_a/synth/manifest.tsv", "--checkpoint",
                    std::string(d) + "/train/model.ckpt", "--history", std::string(d) + "/train/history.csv",
                    "--max-epochs", "3", "--lr", "0.01", "--hidden", "32", "--toy-layers", "4",
                    "--val-split", "train", "--seed", "11"}) == 0;
  tr = tr && same_tree(root / "det_a/train", root / "det_b/train", &ntrain);
  report("determinism/synth", synth, std::to_string(nsynth) + " files bit-identical across two runs");
  report("determinism/segment", seg, std::to_string(nseg) + " files bit-identical across two runs");
  report("determinism/train", tr,
         std::to_string(ntrain) + " files (checkpoint, epoch history) bit-identical across two runs");
}

template <typename F>
void guarded(const std::string& id, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "voxgrade_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  guarded("gradient-suite", gradient_suite);
  guarded("scdw-oracle", scdw_oracle);
  guarded("metric-oracles", metric_oracles);
  guarded("aggregation", aggregation);
  guarded("grade-binning", grade_binning);
  guarded("schedule-trace", schedule_trace);
  guarded("overfit-sanity", [&] { overfit_sanity(root); });
  guarded("fusion-invariants/zero-logits", zero_logit_average);
  guarded("determinism", [&] { determinism(root); });
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
