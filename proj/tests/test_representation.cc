// voxgrade/tests/test_representation.cc

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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "voxgrade/representation.h"

using namespace voxgrade;
namespace fs = std::filesystem;

namespace {

FeatureMatrix random_features(std::size_t frames, std::size_t dim, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> d(0.0f, 2.0f);
  FeatureMatrix m(frames, dim, 100.0);
  for (auto& v : m.values) v = d(rng);
  return m;
}

RepresentationStack<float> random_stack(std::size_t L, std::size_t T, std::size_t D, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> d(-3.0f, 3.0f);
  RepresentationStack<float> s;
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<float> v(T * D);
    for (auto& x : v) x = d(rng);
    s.layers.push_back(Tensor<float>::from({T, D}, std::move(v)));
  }
  return s;
}

EncoderConfig small_encoder(std::uint64_t seed) {
  EncoderConfig c;
  c.n_layers = 4;
  c.model_dim = 32;
  c.n_heads = 4;
  c.ff_dim = 64;
  c.input_dim = 8;
  c.frame_stride = 1;
  c.seed = seed;
  return c;
}

fs::path temp_dir() {
  fs::path p = fs::temp_directory_path() / "voxgrade_test_rep";
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("toy encoder stack shape") {
  auto cfg = small_encoder(1);
  auto s = toy_encode(random_features(10, 8, 1), init_toy_encoder(cfg), cfg);
  CHECK(s.num_layers() == 4);
  CHECK(s.num_frames() == 10);
  CHECK(s.dim() == 32);
  CHECK(s.source == StackSource::kToy);
  cfg.frame_stride = 2;
  auto pooled = toy_encode(random_features(11, 8, 1), init_toy_encoder(cfg), cfg);
  CHECK(pooled.num_frames() == 6);
  CHECK(pooled.frame_rate == doctest::Approx(50.0));
}

TEST_CASE("toy encoder is deterministic and mixes time") {
  auto cfg = small_encoder(3);
  auto x = random_features(10, 8, 2);
  auto a = toy_encode(x, init_toy_encoder(cfg), cfg);
  auto b = toy_encode(x, init_toy_encoder(cfg), cfg);
  for (std::size_t l = 0; l < 4; ++l)
    CHECK(std::equal(a.layers[l].data().begin(), a.layers[l].data().end(), b.layers[l].data().begin()));
  auto y = x;
  for (std::size_t d = 0; d < 8; ++d) y(0, d) += 1.0f;
  auto c = toy_encode(y, init_toy_encoder(cfg), cfg);
  for (std::size_t l = 0; l < 4; ++l) {
    // a frame other than the perturbed one changes, through attention
    bool changed = false;
    for (std::size_t k = 32; k < a.layers[l].numel(); ++k)
      changed = changed || a.layers[l].data()[k] != c.layers[l].data()[k];
    CHECK(changed);
  }
}

TEST_CASE("toy encoder stays finite over a seed sweep") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto cfg = small_encoder(seed);
    cfg.model_dim = 8;
    cfg.n_heads = 2;
    cfg.ff_dim = 8;
    auto s = toy_encode(random_features(6, 8, static_cast<unsigned>(seed)), init_toy_encoder(cfg), cfg);
    for (const auto& l : s.layers)
      for (float v : l.data()) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("toy encoder rejects mismatched input") {
  auto cfg = small_encoder(1);
  CHECK_THROWS_AS(toy_encode(random_features(5, 9, 1), init_toy_encoder(cfg), cfg), ShapeError);
  cfg.n_heads = 5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("RSTK round trip is bit exact") {
  const fs::path p = temp_dir() / "s.rstk";
  auto s = random_stack(12, 100, 768, 5);
  export_stack(p, s);
  CHECK(fs::file_size(p) == 20 + 12ull * 100 * 768 * 4);
  auto r = import_stack(p);
  REQUIRE(r.num_layers() == 12);
  CHECK(r.num_frames() == 100);
  CHECK(r.dim() == 768);
  for (std::size_t l = 0; l < 12; ++l)
    CHECK(std::memcmp(r.layers[l].data().data(), s.layers[l].data().data(), 100 * 768 * 4) == 0);
}

TEST_CASE("RSTK errors name offsets and byte counts") {
  const fs::path dir = temp_dir();
  export_stack(dir / "t.rstk", random_stack(2, 3, 4, 1));
  fs::resize_file(dir / "t.rstk", 20 + 2 * 3 * 4 * 4 - 5);
  try {
    import_stack(dir / "t.rstk");
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    const std::string m = e.what();
    CHECK(m.find("expected 116 bytes, got 111") != std::string::npos);
    CHECK(m.find("at byte") != std::string::npos);
  }
  std::ofstream(dir / "m.rstk", std::ios::binary) << "XXXXaaaabbbbccccdddd";
  CHECK_THROWS_WITH_AS(import_stack(dir / "m.rstk"), doctest::Contains("bad magic"), std::runtime_error);
  std::ofstream(dir / "h.rstk", std::ios::binary) << "RSTK";
  CHECK_THROWS_WITH_AS(import_stack(dir / "h.rstk"), doctest::Contains("truncated header"),
                       std::runtime_error);
}

TEST_CASE("trim_padding keeps leading frames") {
  auto s = random_stack(2, 1500, 4, 2);
  auto t = trim_padding(s, 230);
  CHECK(t.num_frames() == 230);
  CHECK(t.layers[1].at(229, 3) == s.layers[1].at(229, 3));
  auto same = trim_padding(s, 1500);
  CHECK(std::equal(same.layers[0].data().begin(), same.layers[0].data().end(),
                   s.layers[0].data().begin()));
  CHECK_THROWS_AS(trim_padding(s, 0), std::invalid_argument);
  CHECK_THROWS_AS(trim_padding(s, 1501), std::invalid_argument);
  CHECK(valid_frame_count(4.6, 50.0) == 230);
  CHECK(valid_frame_count(0.001, 50.0) == 1);
}

TEST_CASE("align_frames resamples to the shortest stream") {
  auto a = to_tensor<float>(random_features(98, 3, 1));
  auto b = to_tensor<float>(random_features(49, 2, 2));
  auto c = to_tensor<float>(random_features(49, 5, 3));
  auto out = align_frames<float>({a, b, c});
  CHECK(out[0].shape() == Shape{49, 3});
  CHECK(out[1].data().data() == b.data().data());
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(out[0].at(0, d) == doctest::Approx(a.at(0, d)));
    CHECK(out[0].at(48, d) == doctest::Approx(a.at(97, d)));
  }
  // interior: linear interpolation at position i * 97 / 48
  const double pos = 10.0 * 97.0 / 48.0;
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double w = pos - lo;
  CHECK(out[0].at(10, 1) == doctest::Approx((1 - w) * a.at(lo, 1) + w * a.at(lo + 1, 1)).epsilon(1e-5));
  auto single = align_frames<float>({a});
  CHECK(single[0].data().data() == a.data().data());
}

TEST_CASE("trim then align commutes with aligning pre-trimmed input") {
  auto s = random_stack(2, 300, 4, 7);
  auto mel = to_tensor<float>(random_features(250, 3, 8));
  auto trimmed = trim_padding(s, 120);
  auto x = align_frames<float>({trimmed.layers[1], mel});
  RepresentationStack<float> pre;
  pre.layers = {slice(s.layers[0], 0, 0, 120), slice(s.layers[1], 0, 0, 120)};
  auto y = align_frames<float>({pre.layers[1], mel});
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < x[k].numel(); ++i) CHECK(std::abs(x[k].data()[i] - y[k].data()[i]) < 1e-6);
}

TEST_CASE("feature-matrix alignment matches tensor alignment") {
  auto a = random_features(20, 2, 1), b = random_features(7, 2, 2);
  auto m = align_frames(std::vector<FeatureMatrix>{a, b});
  auto t = align_frames<float>({to_tensor<float>(a), to_tensor<float>(b)});
  REQUIRE(m[0].frames == 7);
  for (std::size_t i = 0; i < m[0].values.size(); ++i)
    CHECK(m[0].values[i] == doctest::Approx(t[0].data()[i]).epsilon(1e-5));
}
