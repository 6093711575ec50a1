// voxgrade/tests/test_tensor.cc

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

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "voxgrade/grad_check.h"
#include "voxgrade/grad_suite.h"
#include "voxgrade/tensor.h"

using namespace voxgrade;

namespace {

Tensor<float> leaf(const Shape& s, std::vector<float> v) {
  return Tensor<float>::from(s, std::move(v), true);
}

void check_close(std::span<const float> got, std::vector<double> want, double tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(tol));
}

}  // namespace

TEST_CASE("leaky_relu forward and gradient") {
  Graph<float> g;
  auto scope = g.activate();
  auto x = leaf({2}, {-1.0f, 2.0f});
  auto y = leaky_relu(x, 0.05f);
  check_close(y.data(), {-0.05, 2.0}, 1e-7);
  g.backward(mean_all(y));
  check_close(x.grad(), {0.025, 0.5}, 1e-7);
}

TEST_CASE("leaky_relu gradient at zero is one") {
  Graph<float> g;
  auto scope = g.activate();
  auto x = leaf({1}, {0.0f});
  g.backward(mean_all(leaky_relu(x, 0.05f)));
  CHECK(x.grad()[0] == 1.0f);
}

TEST_CASE("softmax of zeros is uniform and rows sum to one") {
  auto p = softmax(Tensor<float>::zeros({6}), 0);
  for (float v : p.data()) CHECK(v == doctest::Approx(1.0 / 6.0));
  std::mt19937 rng(3);
  std::normal_distribution<float> d(0, 5);
  std::vector<float> v(4 * 7);
  for (auto& x : v) x = d(rng);
  auto q = softmax(Tensor<float>::from({4, 7}, v), 1);
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 7; ++j) s += q.at(i, j);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("softmax is stable for large logits") {
  auto p = softmax(Tensor<float>::from({3}, {1000.0f, 1000.0f, -1000.0f}), 0);
  CHECK(p.at(0) == doctest::Approx(0.5));
  CHECK(p.at(2) == 0.0f);
}

TEST_CASE("layer_norm without affine") {
  auto y = layer_norm(Tensor<double>::from({3}, {1.0, 2.0, 3.0}), 0);
  const double s = std::sqrt(2.0 / 3.0 + 1e-5);
  CHECK(y.at(0) == doctest::Approx(-1.0 / s).epsilon(1e-12));
  CHECK(y.at(1) == doctest::Approx(0.0));
  CHECK(y.at(2) == doctest::Approx(1.0 / s).epsilon(1e-12));
}

TEST_CASE("mean gradient is uniform") {
  Graph<float> g;
  auto scope = g.activate();
  auto x = leaf({2, 2}, {1, 2, 3, 4});
  g.backward(mean_all(x));
  check_close(x.grad(), {0.25, 0.25, 0.25, 0.25}, 1e-7);
}

TEST_CASE("matmul gradient against ones") {
  Graph<float> g;
  auto scope = g.activate();
  auto a = leaf({2, 3}, {1, 2, 3, 4, 5, 6});
  auto b = leaf({3, 2}, {1, 0, 0, 1, 1, 1});
  auto y = matmul(a, b);
  check_close(y.data(), {4, 5, 10, 11}, 1e-7);
  g.backward(mean_all(y));
  // d mean / dA = ones(2,2) B^T / 4, d mean / dB = A^T ones(2,2) / 4
  check_close(a.grad(), {0.25, 0.25, 0.5, 0.25, 0.25, 0.5}, 1e-7);
  check_close(b.grad(), {1.25, 1.25, 1.75, 1.75, 2.25, 2.25}, 1e-7);
}

TEST_CASE("broadcast add reduces gradient over broadcast axes") {
  Graph<float> g;
  auto scope = g.activate();
  auto a = leaf({2, 3}, {0, 0, 0, 0, 0, 0});
  auto b = leaf({3}, {1, 2, 3});
  auto y = add(a, b);
  check_close(y.data(), {1, 2, 3, 1, 2, 3}, 1e-7);
  g.backward(mean_all(y));
  check_close(b.grad(), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-6);
}

TEST_CASE("two-layer tanh network matches independent finite differences") {
  // Independent oracle: plain double arithmetic, no library code.
  const std::size_t n = 3, h = 4;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<double> x(n), w1(n * h), w2(h);
  for (auto* v : {&x, &w1, &w2})
    for (auto& e : *v) e = d(rng);
  auto net = [&](const std::vector<double>& W1) {
    double out = 0;
    for (std::size_t j = 0; j < h; ++j) {
      double z = 0;
      for (std::size_t i = 0; i < n; ++i) z += x[i] * W1[i * h + j];
      out += std::tanh(z) * w2[j];
    }
    return std::tanh(out);
  };
  std::vector<double> fd(n * h);
  for (std::size_t k = 0; k < n * h; ++k) {
    auto p = w1, m = w1;
    p[k] += 1e-6;
    m[k] -= 1e-6;
    fd[k] = (net(p) - net(m)) / 2e-6;
  }

  Graph<double> g;
  auto scope = g.activate();
  auto X = Tensor<double>::from({1, n}, x);
  auto W1 = Tensor<double>::from({n, h}, w1, true);
  auto W2 = Tensor<double>::from({h, 1}, w2, true);
  auto y = mean_all(tanh(matmul(tanh(matmul(X, W1)), W2)));
  CHECK(y.item() == doctest::Approx(net(w1)).epsilon(1e-12));
  g.backward(y);
  for (std::size_t k = 0; k < n * h; ++k)
    CHECK(W1.grad()[k] == doctest::Approx(fd[k]).epsilon(1e-6));
}

TEST_CASE("shape errors name the shapes") {
  auto a = Tensor<float>::zeros({2, 3});
  auto b = Tensor<float>::zeros({2, 3});
  CHECK_THROWS_AS(matmul(a, b), ShapeError);
  try {
    matmul(a, b);
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("[2,3]") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, Tensor<float>::zeros({4})), ShapeError);
  CHECK_THROWS_AS(Tensor<float>::zeros({1, 1, 1, 1}), ShapeError);
}

TEST_CASE("ops outside a graph do not record") {
  Graph<float> g;
  auto x = leaf({2}, {1, 2});
  auto y = tanh(x);
  CHECK(g.size() == 0);
  CHECK(!y.requires_grad());
}

TEST_CASE("grad_check flags a wrong gradient") {
  // f64 path computes a different function, so the comparison must fail.
  DualFunction f{[](const std::vector<Tensor<float>>& xs) { return mean_all(mul(xs[0], xs[0])); },
                 [](const std::vector<Tensor<double>>& xs) { return mean_all(xs[0]); }};
  auto r = grad_check(f, Tensor<float>::from({3}, {0.5f, 1.0f, -0.7f}), 1e-3);
  CHECK(!r.passed);
}

TEST_CASE("grad_check excludes probes that straddle a kink") {
  auto f = make_dual([](const auto& xs) {
    using T = typename std::decay_t<decltype(xs[0])>::value_type;
    return mean_all(leaky_relu(xs[0], T(0.05)));
  });
  auto r = grad_check(f, Tensor<float>::from({2}, {1e-5f, 0.5f}), 1e-3);
  CHECK(r.straddled == 1);
  CHECK(r.passed);
}

TEST_CASE("gradient suite, reduced") {
  GradSuiteOptions opt;
  opt.points_per_primitive = 5;
  opt.pipeline_cases = 3;
  auto res = run_grad_suite(opt);
  for (const auto& c : res.cases)
    if (!c.report.passed) MESSAGE(c.name << " #" << c.point << ": " << c.report.summary());
  CHECK(res.passed());
  CHECK(res.cases.size() == 5 * grad_suite_primitives().size() + 3);
}

TEST_CASE("training-mode forward is deterministic") {
  auto run = [] {
    Graph<float> g;
    auto scope = g.activate();
    auto x = leaf({3, 4}, {0.1f, -0.2f, 0.3f, 0.4f, 0.5f, -0.6f, 0.7f, 0.8f, 0.9f, 1.0f, -1.1f, 1.2f});
    auto y = mean_all(softmax(layer_norm(tanh(x), 1), 1));
    g.backward(y);
    return std::vector<float>(x.grad().begin(), x.grad().end());
  };
  CHECK(run() == run());
}
