// voxgrade/tests/test_objectives.cc

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

#include "doctest.h"
#include "oracles/metric_oracles.h"
#include "voxgrade/objectives.h"

using namespace voxgrade;

namespace {

Tensor<double> probs(std::vector<double> p) {
  const Shape s{p.size()};
  return Tensor<double>::from(s, std::move(p));
}

}  // namespace

TEST_CASE("mae examples") {
  auto t = Tensor<double>::from({5}, {1, 1, 1, 1, 1});
  CHECK(mae_loss(t, t).item() == 0.0);
  CHECK(mae_loss(Tensor<double>::zeros({5}), t).item() == 1.0);
  CHECK(mae_loss(probs({0.5, 2.0}), probs({1.0, 1.0})).item() == 0.75);
  CHECK_THROWS_AS(mae_loss(probs({1}), probs({1, 2})), ShapeError);
}

TEST_CASE("mae gradient is +-1/K") {
  Graph<float> g;
  auto scope = g.activate();
  auto p = Tensor<float>::from({4}, {0.0f, 2.0f, 1.0f, 3.0f}, true);
  g.backward(mae_loss(p, Tensor<float>::from({4}, {1, 1, 2, 2})));
  CHECK(std::vector<float>(p.grad().begin(), p.grad().end()) ==
        std::vector<float>{-0.25f, 0.25f, -0.25f, 0.25f});
}

TEST_CASE("scdw tabulated examples") {
  CHECK(scdw_ce_loss(probs({0.5, 0.3, 0.2}), 0).item() == 0.0);
  CHECK(scdw_ce_loss(probs({0.7, 0.2, 0.1}), 2).item() == doctest::Approx(4.6052).epsilon(1e-4));
  CHECK(scdw_ce_loss(probs({0.7, 0.2, 0.1}), 2).item() == -std::log(0.1) * 2);
  CHECK(scdw_ce_loss(probs({0.1, 0.8, 0.1}), 0).item() == -std::log(0.1));
  CHECK(!std::signbit(scdw_ce_loss(probs({0.5, 0.3, 0.2}), 0).item()));
}

TEST_CASE("scdw matches direct evaluation") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.01, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p{d(rng), d(rng), d(rng)};
    const double s = p[0] + p[1] + p[2];
    for (auto& v : p) v /= s;
    const std::size_t c = rng() % 3;
    CHECK(std::abs(scdw_ce_loss(probs(p), c).item() - oracle::scdw(p, c)) < 1e-9);
  }
}

TEST_CASE("scdw properties") {
  // zero iff argmax is correct, non-decreasing in distance for fixed p_c
  CHECK(scdw_ce_loss(probs({0.2, 0.5, 0.3}), 1).item() == 0.0);
  const double near = scdw_ce_loss(probs({0.3, 0.5, 0.2}), 0).item();
  const double far = scdw_ce_loss(probs({0.3, 0.2, 0.5}), 0).item();
  CHECK(near > 0.0);
  CHECK(far >= near);
  CHECK(far == doctest::Approx(2 * near));
}

TEST_CASE("scdw gradient treats the distance as constant") {
  Graph<double> g;
  auto scope = g.activate();
  auto p = Tensor<double>::from({3}, {0.7, 0.2, 0.1}, true);
  g.backward(scdw_ce_loss(p, 2));
  CHECK(p.grad()[0] == 0.0);
  CHECK(p.grad()[2] == doctest::Approx(-2.0 / 0.1));
}

TEST_CASE("distance floor") {
  CHECK(scdw_ce_loss(probs({0.5, 0.3, 0.2}), 0, 1.0).item() == doctest::Approx(-std::log(0.5)));
  CHECK(scdw_ce_loss(probs({0.7, 0.2, 0.1}), 2, 1.0).item() == doctest::Approx(-2 * std::log(0.1)));
}

TEST_CASE("scdw rejects bad input") {
  CHECK_THROWS_AS(scdw_ce_loss(probs({1.0, 0.0, 0.0}), 1), std::invalid_argument);
  CHECK_THROWS_AS(scdw_ce_loss(probs({0.5, 0.5, 0.0}), 3), std::invalid_argument);
  std::vector<double> tie{0.4, 0.4, 0.2};
  CHECK(predicted_class(std::span<const double>(tie)) == 0);
}
