// voxgrade/tests/test_dsp.cc

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
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "voxgrade/audio.h"
#include "voxgrade/mel.h"

using namespace voxgrade;
namespace fs = std::filesystem;

namespace {

Waveform sine(double hz, double seconds, double amp = 0.5) {
  Waveform w;
  w.samples.resize(static_cast<std::size_t>(seconds * w.sample_rate));
  for (std::size_t t = 0; t < w.samples.size(); ++t)
    w.samples[t] = static_cast<float>(amp * std::sin(2 * std::numbers::pi * hz * t / w.sample_rate));
  return w;
}

Waveform noise(double seconds, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> d(-0.5f, 0.5f);
  Waveform w;
  w.samples.resize(static_cast<std::size_t>(seconds * w.sample_rate));
  for (auto& s : w.samples) s = d(rng);
  return w;
}

FeatureMatrix ramp(std::size_t frames) {
  FeatureMatrix m(frames, 2, 100.0);
  for (std::size_t t = 0; t < frames; ++t) {
    m(t, 0) = static_cast<float>(t);
    m(t, 1) = 3.0f;
  }
  return m;
}

fs::path temp_dir() {
  fs::path p = fs::temp_directory_path() / "voxgrade_test_dsp";
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("frame count for 1 s at 25/10 ms") {
  auto m = log_mel(sine(440, 1.0), MelConfig{});
  CHECK(m.frames == 98);
  CHECK(m.dim == 80);
  CHECK(m.frame_rate == doctest::Approx(100.0));
}

TEST_CASE("silence hits the log floor everywhere") {
  Waveform w;
  w.samples.assign(16000, 0.0f);
  auto m = log_mel(w, MelConfig{});
  for (float v : m.values) CHECK(v == doctest::Approx(std::log(1e-10)));
  auto f = build_mel_features(w, MelConfig{});
  CHECK(f.dim == 240);
  for (std::size_t t = 0; t < f.frames; ++t)
    for (std::size_t d = 80; d < 240; ++d) CHECK(f(t, d) == 0.0f);
}

TEST_CASE("440 Hz peaks at the filter whose centre is nearest 440 Hz") {
  // Independent centre computation: n_mels + 2 points equally spaced in mel.
  const auto to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  const auto to_hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const std::size_t n = 80;
  std::size_t want = 0;
  double best = 1e9;
  for (std::size_t k = 0; k < n; ++k) {
    const double c = to_hz(to_mel(8000.0) * static_cast<double>(k + 1) / (n + 1));
    if (std::abs(c - 440.0) < best) {
      best = std::abs(c - 440.0);
      want = k;
    }
  }
  auto m = log_mel(sine(440, 1.0), MelConfig{});
  const std::size_t t = m.frames / 2;
  std::size_t got = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (m(t, k) > m(t, got)) got = k;
  CHECK(got == want);
}

TEST_CASE("mel scale conversions") {
  CHECK(hz_to_mel(0.0) == 0.0);
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5));
}

TEST_CASE("delta on constants, ramps and single frames") {
  auto d = delta(ramp(10), 1);
  for (std::size_t t = 2; t < 8; ++t) {
    CHECK(d(t, 0) == doctest::Approx(1.0));
    CHECK(d(t, 1) == 0.0f);
  }
  // Edge replication: frame 0 sees c_{-1} = c_{-2} = 0.
  CHECK(d(0, 0) == doctest::Approx((1 * (1 - 0) + 2 * (2 - 0)) / 10.0));
  auto one = delta(ramp(1), 1);
  CHECK(one(0, 0) == 0.0f);
  auto dd = delta(ramp(10), 2);
  CHECK(dd(5, 0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK_THROWS_AS(delta(ramp(3), 3), std::invalid_argument);
}

TEST_CASE("feature blocks are mel, delta, delta-delta") {
  Waveform w = noise(0.5, 4);
  auto mel = log_mel(w, MelConfig{});
  auto d1 = delta(mel, 1);
  auto d2 = delta(d1, 1);
  auto f = build_mel_features(w, MelConfig{});
  REQUIRE(f.frames == mel.frames);
  for (std::size_t t = 0; t < f.frames; ++t)
    for (std::size_t k = 0; k < 80; ++k) {
      CHECK(f(t, k) == mel(t, k));
      CHECK(f(t, 80 + k) == d1(t, k));
      CHECK(f(t, 160 + k) == d2(t, k));
    }
}

TEST_CASE("amplitude scaling shifts log-mel by log(k^2) and leaves deltas") {
  Waveform w = noise(0.5, 9), w2 = w;
  for (auto& s : w2.samples) s *= 0.5f;
  auto a = build_mel_features(w, MelConfig{});
  auto b = build_mel_features(w2, MelConfig{});
  const double shift = std::log(0.25);
  for (std::size_t t = 0; t < a.frames; ++t)
    for (std::size_t k = 0; k < 80; ++k) {
      if (a(t, k) < std::log(1e-8)) continue;
      CHECK(b(t, k) - a(t, k) == doctest::Approx(shift).epsilon(1e-4));
      CHECK(std::abs(b(t, 80 + k) - a(t, 80 + k)) < 1e-4);
    }
}

TEST_CASE("log_mel rejects short input and other rates") {
  Waveform w = sine(440, 0.01);
  CHECK_THROWS_AS(log_mel(w, MelConfig{}), std::invalid_argument);
  Waveform r = sine(440, 1.0);
  r.sample_rate = 44100;
  CHECK_THROWS_AS(log_mel(r, MelConfig{}), std::invalid_argument);
  MelConfig bad;
  bad.window_ms = 5;
  CHECK_THROWS_AS(log_mel(sine(440, 1.0), bad), std::invalid_argument);
}

TEST_CASE("features are finite for loud and quiet input") {
  Waveform w = noise(0.3, 1);
  for (std::size_t i = 0; i < w.samples.size(); i += 3) w.samples[i] = 1.0f;
  for (float v : build_mel_features(w, MelConfig{}).values) CHECK(std::isfinite(v));
}

TEST_CASE("wav round trip") {
  const fs::path dir = temp_dir();
  Waveform w = noise(0.1, 2);
  write_wav(dir / "f.wav", w, WavEncoding::kFloat32);
  auto f = read_wav(dir / "f.wav");
  CHECK(f.samples == w.samples);
  CHECK(f.sample_rate == 16000);
  write_wav(dir / "p.wav", w, WavEncoding::kPcm16);
  auto p = read_wav(dir / "p.wav");
  REQUIRE(p.samples.size() == w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    CHECK(std::abs(p.samples[i] - w.samples[i]) < 1.0 / 32767);
  std::ofstream(dir / "junk.wav") << "not a wav file at all";
  CHECK_THROWS_AS(read_wav(dir / "junk.wav"), std::runtime_error);
  CHECK_THROWS_AS(read_wav(dir / "missing.wav"), std::runtime_error);
}
