// voxgrade/mel.h

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

#ifndef VOXGRADE_MEL_H_
#define VOXGRADE_MEL_H_

#include <cstddef>
#include <span>
#include <vector>

#include "voxgrade/audio.h"

namespace voxgrade {

struct MelConfig {
  std::size_t n_mels = 80;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  double fmin = 0.0;
  double fmax = 0.0;  // <= 0 means sample_rate / 2
  double log_floor = 1e-10;

  void validate(int sample_rate) const;
};

// T x D row-major frame matrix.
struct FeatureMatrix {
  std::size_t frames = 0;
  std::size_t dim = 0;
  std::vector<float> values;
  double frame_rate = 0.0;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t t, std::size_t d, double rate)
      : frames(t), dim(d), values(t * d, 0.0f), frame_rate(rate) {}

  float& operator()(std::size_t t, std::size_t d) { return values[t * dim + d]; }
  float operator()(std::size_t t, std::size_t d) const {
    return values[t * dim + d];
  }
  std::span<const float> row(std::size_t t) const {
    return {values.data() + t * dim, dim};
  }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters equally spaced on the mel scale, as
// n_mels x (n_fft / 2 + 1) weights.
std::vector<std::vector<double>> mel_filterbank(const MelConfig& cfg,
                                                int sample_rate,
                                                std::size_t n_fft);

/// Log-mel spectrogram: Hann window, |FFT|^2, triangular mel filters, natural
/// log with a floor. Only 16 kHz input is accepted.
///
/// T = 1 + floor((len - window) / hop); the FFT size is the next power of two
/// at or above the window length.
FeatureMatrix log_mel(const Waveform& wave, const MelConfig& cfg);

/// Regression delta over a +-2 frame window with edge replication:
/// d_t = sum_{n=1..2} n (c_{t+n} - c_{t-n}) / (2 sum n^2). Order 2 applies
/// the formula twice.
FeatureMatrix delta(const FeatureMatrix& features, int order);

/// [log-mel | delta | delta-delta], 3 * n_mels columns.
FeatureMatrix build_mel_features(const Waveform& wave, const MelConfig& cfg);

}  // namespace voxgrade

#endif  // VOXGRADE_MEL_H_
