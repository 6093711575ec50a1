// voxgrade/src/mel.cc

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

#include "voxgrade/mel.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

namespace voxgrade {

namespace {

std::size_t ms_to_samples(double ms, int sample_rate) {
  return static_cast<std::size_t>(std::lround(ms * sample_rate / 1000.0));
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
struct PlanDestroy {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};

}  // namespace

void MelConfig::validate(int sample_rate) const {
  const double nyquist = sample_rate / 2.0;
  const double top = fmax > 0.0 ? fmax : nyquist;
  if (n_mels < 1) throw std::invalid_argument("mel: n_mels must be >= 1");
  if (hop_ms <= 0.0 || window_ms < hop_ms)
    throw std::invalid_argument("mel: need window_ms >= hop_ms > 0");
  if (!(fmin >= 0.0 && fmin < top && top <= nyquist))
    throw std::invalid_argument("mel: need 0 <= fmin < fmax <= sample_rate/2");
  if (!(log_floor > 0.0)) throw std::invalid_argument("mel: log_floor must be > 0");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<std::vector<double>> mel_filterbank(const MelConfig& cfg,
                                                int sample_rate,
                                                std::size_t n_fft) {
  const double top = cfg.fmax > 0.0 ? cfg.fmax : sample_rate / 2.0;
  const double lo = hz_to_mel(cfg.fmin);
  const double hi = hz_to_mel(top);
  std::vector<double> edges(cfg.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) /
                                  static_cast<double>(cfg.n_mels + 1));
  const std::size_t n_bins = n_fft / 2 + 1;
  std::vector<std::vector<double>> bank(cfg.n_mels,
                                        std::vector<double>(n_bins, 0.0));
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      double w = 0.0;
      if (f > left && f <= center)
        w = (f - left) / (center - left);
      else if (f > center && f < right)
        w = (right - f) / (right - center);
      bank[m][k] = w;
    }
  }
  return bank;
}

FeatureMatrix log_mel(const Waveform& wave, const MelConfig& cfg) {
  wave.validate();
  if (wave.sample_rate != kCanonicalSampleRate)
    throw std::invalid_argument("log_mel: sample rate " +
                                std::to_string(wave.sample_rate) +
                                " Hz is not supported (16000 Hz only)");
  cfg.validate(wave.sample_rate);
  const std::size_t window = ms_to_samples(cfg.window_ms, wave.sample_rate);
  const std::size_t hop = ms_to_samples(cfg.hop_ms, wave.sample_rate);
  if (wave.samples.size() < window)
    throw std::invalid_argument(
        "log_mel: waveform of " + std::to_string(wave.samples.size()) +
        " samples is shorter than one window (" + std::to_string(window) + ")");
  const std::size_t frames = 1 + (wave.samples.size() - window) / hop;
  const std::size_t n_fft = next_pow2(window);
  const std::size_t n_bins = n_fft / 2 + 1;
  const auto bank = mel_filterbank(cfg, wave.sample_rate, n_fft);

  // Periodic Hann window.
  std::vector<double> hann(window);
  for (std::size_t i = 0; i < window; ++i)
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                   static_cast<double>(window));

  std::unique_ptr<double, FftwFree> in(
      static_cast<double*>(fftw_malloc(sizeof(double) * n_fft)));
  std::unique_ptr<fftw_complex, FftwFree> out(static_cast<fftw_complex*>(
      fftw_malloc(sizeof(fftw_complex) * n_bins)));
  std::unique_ptr<fftw_plan_s, PlanDestroy> plan(fftw_plan_dft_r2c_1d(
      static_cast<int>(n_fft), in.get(), out.get(), FFTW_ESTIMATE));

  FeatureMatrix result(frames, cfg.n_mels, 1000.0 / cfg.hop_ms);
  std::vector<double> power(n_bins);
  for (std::size_t t = 0; t < frames; ++t) {
    const float* frame = wave.samples.data() + t * hop;
    for (std::size_t i = 0; i < window; ++i) in.get()[i] = frame[i] * hann[i];
    std::fill(in.get() + window, in.get() + n_fft, 0.0);
    fftw_execute(plan.get());
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double re = out.get()[k][0], im = out.get()[k][1];
      power[k] = re * re + im * im;
    }
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
      double energy = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k) energy += bank[m][k] * power[k];
      result(t, m) = static_cast<float>(std::log(std::max(energy, cfg.log_floor)));
    }
  }
  return result;
}

FeatureMatrix delta(const FeatureMatrix& features, int order) {
  if (order != 1 && order != 2)
    throw std::invalid_argument("delta: order must be 1 or 2");
  if (features.frames < 1) throw std::invalid_argument("delta: no frames");
  constexpr int kHalfWindow = 2;
  constexpr double kNorm = 2.0 * (1 * 1 + 2 * 2);
  const auto last = static_cast<long>(features.frames) - 1;
  FeatureMatrix out(features.frames, features.dim, features.frame_rate);
  for (long t = 0; t <= last; ++t)
    for (std::size_t d = 0; d < features.dim; ++d) {
      double acc = 0.0;
      for (int n = 1; n <= kHalfWindow; ++n) {
        const long ahead = std::min(t + n, last);
        const long behind = std::max(t - n, 0L);
        acc += n * (static_cast<double>(features(ahead, d)) - features(behind, d));
      }
      out(t, d) = static_cast<float>(acc / kNorm);
    }
  return order == 1 ? out : delta(out, 1);
}

FeatureMatrix build_mel_features(const Waveform& wave, const MelConfig& cfg) {
  const FeatureMatrix base = log_mel(wave, cfg);
  const FeatureMatrix d1 = delta(base, 1);
  const FeatureMatrix d2 = delta(base, 2);
  const std::size_t n = cfg.n_mels;
  FeatureMatrix out(base.frames, 3 * n, base.frame_rate);
  for (std::size_t t = 0; t < base.frames; ++t)
    for (std::size_t m = 0; m < n; ++m) {
      out(t, m) = base(t, m);
      out(t, n + m) = d1(t, m);
      out(t, 2 * n + m) = d2(t, m);
    }
  return out;
}

}  // namespace voxgrade
