// voxgrade/datasets.h

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

#ifndef VOXGRADE_DATASETS_H_
#define VOXGRADE_DATASETS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "voxgrade/audio.h"

namespace voxgrade {

enum class Split { kTrain, kVal, kTest };
const char* split_name(Split split);
Split parse_split(const std::string& name);

// Label family of a record; the model task picks one or five GRBAS scores,
// or the three-way grade class.
enum class LabelTask { kGrbas, kGrade3 };
const char* label_task_name(LabelTask task);
LabelTask parse_label_task(const std::string& name);

inline constexpr std::array<const char*, 5> kGrbasNames = {"G", "R", "B", "A", "S"};

/// Audio path, optionally with precomputed ASR and SSL stacks. Serialized
/// as `audio` or `audio;asr.rstk;ssl.rstk`; paths are relative to the
/// manifest's directory.
struct UtteranceSource {
  std::string audio;
  std::string asr_stack, ssl_stack;

  bool has_stacks() const { return !asr_stack.empty(); }
  std::string serialize() const;
  static UtteranceSource parse(const std::string& field);
};

struct UtteranceRecord {
  std::string utterance_id;
  std::string patient_id;
  Split split = Split::kTrain;
  LabelTask task = LabelTask::kGrbas;
  UtteranceSource source;
  std::optional<std::array<double, 5>> grbas;
  std::optional<std::size_t> grade_class;

  void validate() const;
};

struct Manifest {
  // pvqd-s | pvqd-a | stn-dbs | synthetic, or empty
  std::string tag;
  std::vector<UtteranceRecord> records;

  // Unique utterance ids, split-disjoint patients, labels in range.
  void validate() const;
  std::vector<UtteranceRecord> select(Split split) const;
};

// TSV, one record per line:
// utterance_id patient_id split task source g r b a s grade_class
// Lines starting with '#' are comments; '# dataset=<tag>' sets the tag.
// Rewrites relative source paths written against `from_dir` so they resolve
// from `to_dir`. Absolute paths are left alone.
void rebase_sources(Manifest& manifest, const std::filesystem::path& from_dir,
                    const std::filesystem::path& to_dir);

Manifest read_manifest(std::istream& is);
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& os, const Manifest& manifest);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

struct SegmentSpec {
  double min_s = 2.0;
  double max_s = 4.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Cuts consecutive non-overlapping segments with lengths drawn uniformly
/// in [min_s, max_s]; a final segment is clipped to the remaining audio,
/// and a remainder shorter than min_s is dropped.
std::vector<Waveform> segment_running_speech(const Waveform& wave, const SegmentSpec& spec);

struct VowelTakes {
  std::vector<Waveform> a;
  std::optional<Waveform> i, u, e, o;
};

// One utterance per /a/ take: a_k, i, u, e, o concatenated sample by sample.
std::vector<Waveform> combine_vowels(const VowelTakes& takes);

std::array<double, 5> average_rater_labels(const std::vector<std::array<double, 5>>& ratings);

/// Patient partition by ratios (train, val, test) or by patient counts.
/// With ratios, val and test get floor(ratio * patients) and train the rest.
struct SplitPlan {
  std::optional<std::array<double, 3>> ratios;
  std::optional<std::array<std::size_t, 3>> counts;
};

struct SplitSummary {
  std::array<std::size_t, 3> patients{};
  std::array<std::size_t, 3> utterances{};
  std::vector<std::string> warnings;
};

Manifest split_by_patient(const Manifest& input, const SplitPlan& plan, std::uint64_t seed,
                          SplitSummary* summary = nullptr);

struct SynthConfig {
  std::size_t n_patients = 10;
  std::size_t utt_per_patient = 4;
  std::uint64_t seed = 0;
  double duration_s = 1.0;
  LabelTask task = LabelTask::kGrbas;
  std::string audio_dir = "audio";
};

// Degradation level of patient p out of n: evenly spaced over [0,3].
double synth_degradation(std::size_t patient, std::size_t n_patients);

/// Harmonic vowel-like tones with noise and amplitude jitter scaled by the
/// patient's degradation d. Labels: G = d, other indicators d plus a seeded
/// offset shared by all patients, clipped to [0,3]; grade class bin_grade(d).
/// Writes WAVs under out_dir/audio_dir and returns the (all-train) manifest.
Manifest synth_dataset(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace voxgrade

#endif  // VOXGRADE_DATASETS_H_
