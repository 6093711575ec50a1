// voxgrade/src/grad_suite.cc

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

#include "voxgrade/grad_suite.h"

#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <type_traits>

#include "voxgrade/objectives.h"

namespace voxgrade {

namespace {

using Inputs = std::vector<Tensor<float>>;

// Random point generator for one check.
class PointRng {
 public:
  explicit PointRng(std::uint64_t seed) : rng_(seed) {}

  Tensor<float> uniform(const Shape& shape, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<float> v(numel(shape));
    for (auto& x : v) x = static_cast<float>(d(rng_));
    return Tensor<float>::from(shape, std::move(v));
  }
  // Uniform in [-1, 1] with |x| >= margin.
  Tensor<float> away_from_zero(const Shape& shape, double margin = 0.1) {
    std::uniform_real_distribution<double> mag(margin, 1.0);
    std::bernoulli_distribution sign(0.5);
    std::vector<float> v(numel(shape));
    for (auto& x : v) x = static_cast<float>(sign(rng_) ? mag(rng_) : -mag(rng_));
    return Tensor<float>::from(shape, std::move(v));
  }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

 private:
  std::mt19937_64 rng_;
};

// Contracts an arbitrary tensor to a scalar with fixed pseudo-random
// weights, so that every output element contributes to the gradient.
template <typename T>
Tensor<T> probe(const Tensor<T>& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<T> w(y.numel());
  for (auto& x : w) x = static_cast<T>(d(rng));
  return mean_all(mul(y, Tensor<T>::from(y.shape(), std::move(w))));
}

struct PrimitiveCheck {
  std::string name;
  std::function<Inputs(PointRng&, std::size_t)> make_point;
  std::function<DualFunction(std::size_t, std::uint64_t)> make_function;
};

template <typename F>
std::function<DualFunction(std::size_t, std::uint64_t)> probed(F op) {
  return [op](std::size_t point, std::uint64_t seed) {
    return make_dual([op, point, seed](const auto& xs) {
      return probe(op(xs, point), seed);
    });
  };
}

std::vector<PrimitiveCheck> primitive_checks() {
  std::vector<PrimitiveCheck> checks;
  auto unit = [](Shape s) {
    return [s](PointRng& r, std::size_t) { return Inputs{r.uniform(s)}; };
  };
  checks.push_back({"matmul",
                    [](PointRng& r, std::size_t) {
                      return Inputs{r.uniform({3, 4}), r.uniform({4, 2})};
                    },
                    probed([](const auto& x, std::size_t) { return matmul(x[0], x[1]); })});
  checks.push_back({"add",
                    [](PointRng& r, std::size_t) {
                      return Inputs{r.uniform({3, 4}), r.uniform({4})};
                    },
                    probed([](const auto& x, std::size_t) { return add(x[0], x[1]); })});
  checks.push_back({"sub",
                    [](PointRng& r, std::size_t) {
                      return Inputs{r.uniform({3, 4}), r.uniform({3, 4})};
                    },
                    probed([](const auto& x, std::size_t) { return sub(x[0], x[1]); })});
  checks.push_back({"mul",
                    [](PointRng& r, std::size_t) {
                      return Inputs{r.uniform({2, 3, 4}), r.uniform({3, 1})};
                    },
                    probed([](const auto& x, std::size_t) { return mul(x[0], x[1]); })});
  checks.push_back({"abs_diff",
                    [](PointRng& r, std::size_t) {
                      Tensor<float> a = r.uniform({3, 4});
                      Tensor<float> gap = r.away_from_zero({3, 4});
                      std::vector<float> b(a.numel());
                      for (std::size_t i = 0; i < b.size(); ++i)
                        b[i] = a.data()[i] + gap.data()[i];
                      return Inputs{a, Tensor<float>::from({3, 4}, b)};
                    },
                    probed([](const auto& x, std::size_t) { return abs_diff(x[0], x[1]); })});
  checks.push_back({"scale", unit({5}), probed([](const auto& x, std::size_t) {
                      using T = typename std::decay_t<decltype(x[0])>::value_type;
                      return scale(x[0], T(0.7));
                    })});
  checks.push_back({"concat",
                    [](PointRng& r, std::size_t p) {
                      return p % 2 == 0 ? Inputs{r.uniform({2, 3}), r.uniform({2, 2})}
                                        : Inputs{r.uniform({2, 3}), r.uniform({1, 3})};
                    },
                    probed([](const auto& x, std::size_t p) {
                      using T = typename std::decay_t<decltype(x[0])>::value_type;
                      return concat(std::vector<Tensor<T>>{x[0], x[1]}, p % 2 == 0 ? 1 : 0);
                    })});
  checks.push_back({"slice", unit({4, 5}), probed([](const auto& x, std::size_t p) {
                      return p % 2 == 0 ? slice(x[0], 1, 1, 4) : slice(x[0], 0, 2, 4);
                    })});
  checks.push_back({"transpose", unit({3, 4}),
                    probed([](const auto& x, std::size_t) { return transpose(x[0]); })});
  checks.push_back({"tanh", unit({3, 4}),
                    probed([](const auto& x, std::size_t) { return tanh(x[0]); })});
  checks.push_back({"sigmoid",
                    [](PointRng& r, std::size_t) { return Inputs{r.uniform({3, 4}, -3, 3)}; },
                    probed([](const auto& x, std::size_t) { return sigmoid(x[0]); })});
  checks.push_back({"leaky_relu",
                    [](PointRng& r, std::size_t) { return Inputs{r.away_from_zero({3, 4})}; },
                    probed([](const auto& x, std::size_t) {
                      using T = typename std::decay_t<decltype(x[0])>::value_type;
                      return leaky_relu(x[0], T(kLeakySlope));
                    })});
  checks.push_back({"layer_norm", unit({3, 5}), probed([](const auto& x, std::size_t p) {
                      return layer_norm(x[0], p % 2);
                    })});
  checks.push_back({"softmax",
                    [](PointRng& r, std::size_t) { return Inputs{r.uniform({3, 4}, -2, 2)}; },
                    probed([](const auto& x, std::size_t p) { return softmax(x[0], p % 2); })});
  checks.push_back({"log",
                    [](PointRng& r, std::size_t) { return Inputs{r.uniform({3, 4}, 0.5, 2.0)}; },
                    probed([](const auto& x, std::size_t) { return log(x[0]); })});
  checks.push_back({"mean", unit({3, 4}), probed([](const auto& x, std::size_t p) {
                      return mean(x[0], p % 2);
                    })});
  checks.push_back({"mean_all", unit({3, 4}),
                    probed([](const auto& x, std::size_t) { return mean_all(x[0]); })});
  checks.push_back({"mae_loss",
                    [](PointRng& r, std::size_t) {
                      Tensor<float> target = r.uniform({5}, 0, 3);
                      Tensor<float> gap = r.away_from_zero({5});
                      std::vector<float> pred(5);
                      for (std::size_t i = 0; i < 5; ++i)
                        pred[i] = target.data()[i] + gap.data()[i];
                      return Inputs{Tensor<float>::from({5}, pred), target};
                    },
                    [](std::size_t, std::uint64_t) {
                      return make_dual([](const auto& x) { return mae_loss(x[0], x[1]); });
                    }});
  checks.push_back({"scdw_ce_loss",
                    [](PointRng& r, std::size_t) { return Inputs{r.uniform({3}, -2, 2)}; },
                    [](std::size_t p, std::uint64_t) {
                      const std::size_t c = p % 3;
                      const double floor = p % 2 == 0 ? 0.0 : 1.0;
                      return make_dual([c, floor](const auto& x) {
                        return scdw_ce_loss(softmax(x[0], 0), c, floor);
                      });
                    }});
  checks.push_back({"lstm_forward",
                    [](PointRng& r, std::size_t) {
                      return Inputs{r.uniform({4, 3}), r.uniform({3, 8}, -0.5, 0.5),
                                    r.uniform({2, 8}, -0.5, 0.5), r.uniform({8}, -0.5, 0.5)};
                    },
                    probed([](const auto& x, std::size_t) {
                      using T = typename std::decay_t<decltype(x[0])>::value_type;
                      return lstm_forward(x[0], LstmParams<T>{x[1], x[2], x[3]});
                    })});
  checks.push_back({"adapter_forward",
                    [](PointRng& r, std::size_t) {
                      // Keep pre-activations away from the leaky_relu kink via a
                      // bias that dominates the random projection.
                      return Inputs{r.uniform({3, 4}), r.uniform({4, 6}, -0.2, 0.2),
                                    r.away_from_zero({6}, 0.9), r.uniform({6}, 0.5, 1.5),
                                    r.uniform({6})};
                    },
                    probed([](const auto& x, std::size_t) {
                      using T = typename std::decay_t<decltype(x[0])>::value_type;
                      AdapterParams<T> a{Linear<T>{x[1], x[2]}, AffineNorm<T>{x[3], x[4]}};
                      return adapter_forward(x[0], a);
                    })});
  return checks;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = seed * 0x9E3779B97F4A7C15ULL + a;
  h ^= h >> 31;
  h = h * 0xBF58476D1CE4E5B9ULL + b;
  h ^= h >> 29;
  return h;
}

// Parameter containers built once per case; evaluations only rebind slots.
template <typename T>
struct PipelineSkeleton {
  ModelParams<T> params;
  std::vector<Tensor<T>*> slots;
  UtteranceInput<T> input;
  Tensor<T> target;

  PipelineSkeleton(const ModelConfig& cfg, const UtteranceInput<float>& in,
                   const Tensor<float>& tgt)
      : params(allocate_params<T>(cfg)),
        input(in.template cast<T>()),
        target(tgt.template cast<T>()) {
    params.visit([&](const std::string&, Tensor<T>& t) { slots.push_back(&t); });
  }
};

GradSuiteCase pipeline_case(std::size_t index, const GradSuiteOptions& options) {
  static constexpr Task kTasks[] = {Task::kGrbasSingle, Task::kGrbasMulti, Task::kGrade3};
  const Task task = kTasks[index % 3];
  const std::uint64_t seed = mix(options.seed, 1000, index);
  const ModelConfig cfg = toy_pipeline_config(task, seed);
  ModelParams<float> params = init_params(cfg);
  PointRng rng(seed ^ 0x5DEECE66DULL);

  const std::size_t frames = 6;
  UtteranceInput<float> input;
  input.mel = rng.uniform({frames, 3 * cfg.n_mels});
  input.base_mel = slice(input.mel, 1, 0, cfg.n_mels);
  input.mel_frame_rate = 100.0;
  Tensor<float> target = rng.uniform({output_dim(task)}, 0.0, 3.0);
  const std::size_t true_class = rng.index(3);

  Inputs point;
  for (auto& [name, t] : params.named()) point.push_back(t.detach());

  auto f32 = std::make_shared<PipelineSkeleton<float>>(cfg, input, target);
  auto f64 = std::make_shared<PipelineSkeleton<double>>(cfg, input, target);
  auto f = make_dual([f32, f64, true_class](const auto& xs) {
    using T = typename std::decay_t<decltype(xs[0])>::value_type;
    auto& sk = [&]() -> PipelineSkeleton<T>& {
      if constexpr (std::is_same_v<T, float>) return *f32;
      else return *f64;
    }();
    for (std::size_t i = 0; i < xs.size(); ++i) *sk.slots[i] = xs[i];
    Tensor<T> out = model_forward(sk.params, sk.input);
    if (sk.params.config.task == Task::kGrade3) return scdw_ce_loss(out, true_class, 1.0);
    return mae_loss(out, sk.target);
  });

  GradSuiteCase c;
  c.name = std::string("pipeline/") + task_name(task);
  c.point = index;
  c.report = grad_check(f, point, options.rtol, options.pipeline_check);
  return c;
}

}  // namespace

std::vector<std::string> grad_suite_primitives() {
  std::vector<std::string> names;
  for (const auto& c : primitive_checks()) names.push_back(c.name);
  return names;
}

ModelConfig toy_pipeline_config(Task task, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.task = task;
  cfg.encoder = EncoderMode::kToy;
  cfg.n_mels = 4;
  cfg.toy.n_layers = 2;
  cfg.toy.model_dim = 4;
  cfg.toy.n_heads = 2;
  cfg.toy.ff_dim = 4;
  cfg.toy.input_dim = 4;
  cfg.toy.frame_stride = 2;
  cfg.toy.seed = seed;
  cfg.adapter_dim = 6;
  cfg.hidden = 5;
  cfg.seed = seed + 17;
  return cfg;
}

GradSuiteResult run_grad_suite(const GradSuiteOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  GradSuiteResult result;
  const auto checks = primitive_checks();
  for (std::size_t k = 0; k < checks.size(); ++k) {
    for (std::size_t p = 0; p < options.points_per_primitive; ++p) {
      const std::uint64_t seed = mix(options.seed, k, p);
      PointRng rng(seed);
      Inputs point = checks[k].make_point(rng, p);
      GradSuiteCase c;
      c.name = checks[k].name;
      c.point = p;
      c.report = grad_check(checks[k].make_function(p, seed + 1), point, options.rtol,
                            options.primitive_check);
      if (!c.report.passed) ++result.failures;
      result.cases.push_back(std::move(c));
    }
  }
  for (std::size_t i = 0; i < options.pipeline_cases; ++i) {
    GradSuiteCase c = pipeline_case(i, options);
    if (!c.report.passed) ++result.failures;
    result.cases.push_back(std::move(c));
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace voxgrade
