// voxgrade/audio.h

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

#ifndef VOXGRADE_AUDIO_H_
#define VOXGRADE_AUDIO_H_

#include <filesystem>
#include <vector>

namespace voxgrade {

inline constexpr int kCanonicalSampleRate = 16000;

// Mono audio with samples nominally in [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = kCanonicalSampleRate;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  // Throws std::invalid_argument when empty, non-finite or rate <= 0.
  void validate() const;
};

enum class WavEncoding { kPcm16, kFloat32 };

// Reads a mono RIFF/WAVE file holding 16-bit PCM or 32-bit float samples.
// Multi-channel files and other encodings are rejected.
Waveform read_wav(const std::filesystem::path& path);

void write_wav(const std::filesystem::path& path, const Waveform& wave,
               WavEncoding encoding = WavEncoding::kPcm16);

}  // namespace voxgrade

#endif  // VOXGRADE_AUDIO_H_
