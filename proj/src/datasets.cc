// voxgrade/src/datasets.cc

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

#include "voxgrade/datasets.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "voxgrade/metrics.h"

namespace voxgrade {

const char* split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw std::invalid_argument("unknown split '" + name + "' (expected train|val|test)");
}

const char* label_task_name(LabelTask task) {
  return task == LabelTask::kGrbas ? "grbas" : "grade3";
}

LabelTask parse_label_task(const std::string& name) {
  if (name == "grbas") return LabelTask::kGrbas;
  if (name == "grade3") return LabelTask::kGrade3;
  throw std::invalid_argument("unknown label task '" + name + "' (expected grbas|grade3)");
}

std::string UtteranceSource::serialize() const {
  if (!has_stacks()) return audio;
  return audio + ";" + asr_stack + ";" + ssl_stack;
}

UtteranceSource UtteranceSource::parse(const std::string& field) {
  std::vector<std::string> parts;
  std::stringstream ss(field);
  std::string p;
  while (std::getline(ss, p, ';')) parts.push_back(p);
  UtteranceSource s;
  if (parts.size() == 1) {
    s.audio = parts[0];
  } else if (parts.size() == 3) {
    s.audio = parts[0];
    s.asr_stack = parts[1];
    s.ssl_stack = parts[2];
  } else {
    throw std::invalid_argument("source field '" + field +
                                "' must be 'audio' or 'audio;asr.rstk;ssl.rstk'");
  }
  for (const auto& q : parts)
    if (q.empty()) throw std::invalid_argument("source field '" + field + "' has an empty path");
  return s;
}

void UtteranceRecord::validate() const {
  const std::string where = "utterance '" + utterance_id + "': ";
  if (utterance_id.empty()) throw std::invalid_argument("utterance with empty id");
  if (patient_id.empty()) throw std::invalid_argument(where + "empty patient id");
  for (const std::string* s : {&utterance_id, &patient_id, &source.audio})
    if (s->find_first_of("\t\n") != std::string::npos)
      throw std::invalid_argument(where + "field contains a tab or newline");
  if (source.audio.empty()) throw std::invalid_argument(where + "no audio path");
  if (grbas) {
    for (std::size_t k = 0; k < 5; ++k) {
      const double v = (*grbas)[k];
      if (!(v >= 0.0 && v <= 3.0))
        throw std::invalid_argument(where + kGrbasNames[k] + " label " + format_double(v) +
                                    " outside [0,3]");
    }
  }
  if (grade_class && *grade_class >= kNumGradeClasses)
    throw std::invalid_argument(where + "grade class " + std::to_string(*grade_class) +
                                " not in {0,1,2}");
  if (task == LabelTask::kGrbas && !grbas)
    throw std::invalid_argument(where + "grbas record without GRBAS labels");
  if (task == LabelTask::kGrade3 && !grade_class)
    throw std::invalid_argument(where + "grade3 record without a grade class");
  if (grbas && grade_class && bin_grade((*grbas)[0]) != *grade_class)
    throw std::invalid_argument(where + "grade class " + std::to_string(*grade_class) +
                                " disagrees with Grade " + format_double((*grbas)[0]));
}

void Manifest::validate() const {
  std::unordered_set<std::string> ids;
  std::unordered_map<std::string, Split> patient_split;
  for (const auto& r : records) {
    r.validate();
    if (!ids.insert(r.utterance_id).second)
      throw std::invalid_argument("manifest: duplicate utterance id '" + r.utterance_id + "'");
    auto [it, inserted] = patient_split.emplace(r.patient_id, r.split);
    if (!inserted && it->second != r.split)
      throw std::invalid_argument("manifest: patient '" + r.patient_id + "' appears in both " +
                                  split_name(it->second) + " and " + split_name(r.split));
  }
}

std::vector<UtteranceRecord> Manifest::select(Split split) const {
  std::vector<UtteranceRecord> out;
  for (const auto& r : records)
    if (r.split == split) out.push_back(r);
  return out;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> f;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    f.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return f;
}

double parse_label(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("manifest line " + std::to_string(line) + ": bad number '" + s +
                                "'");
  return v;
}

constexpr std::size_t kManifestFields = 11;

}  // namespace

Manifest read_manifest(std::istream& is) {
  Manifest m;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "# dataset=";
      if (line.rfind(key, 0) == 0) m.tag = line.substr(key.size());
      continue;
    }
    const auto f = split_tabs(line);
    if (f.size() != kManifestFields)
      throw std::invalid_argument("manifest line " + std::to_string(n) + ": expected " +
                                  std::to_string(kManifestFields) + " tab-separated fields, got " +
                                  std::to_string(f.size()));
    try {
      UtteranceRecord r;
      r.utterance_id = f[0];
      r.patient_id = f[1];
      r.split = parse_split(f[2]);
      r.task = parse_label_task(f[3]);
      r.source = UtteranceSource::parse(f[4]);
      const bool any = std::any_of(f.begin() + 5, f.begin() + 10, [](auto& s) { return !s.empty(); });
      if (any) {
        std::array<double, 5> g{};
        for (std::size_t k = 0; k < 5; ++k) {
          if (f[5 + k].empty())
            throw std::invalid_argument(std::string("missing ") + kGrbasNames[k] + " label");
          g[k] = parse_label(f[5 + k], n);
        }
        r.grbas = g;
      }
      if (!f[10].empty()) {
        const double c = parse_label(f[10], n);
        if (c != std::floor(c) || c < 0)
          throw std::invalid_argument("grade class '" + f[10] + "' is not a class index");
        r.grade_class = static_cast<std::size_t>(c);
      }
      r.validate();
      m.records.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      if (msg.rfind("manifest line", 0) == 0) throw;
      throw std::invalid_argument("manifest line " + std::to_string(n) + ": " + msg);
    }
  }
  m.validate();
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  return read_manifest(in);
}

void rebase_sources(Manifest& manifest, const std::filesystem::path& from_dir,
                    const std::filesystem::path& to_dir) {
  namespace fs = std::filesystem;
  const fs::path from = fs::absolute(from_dir).lexically_normal();
  const fs::path to = fs::absolute(to_dir).lexically_normal();
  if (from == to) return;
  auto rebase = [&](std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return;
    p = (from / p).lexically_normal().lexically_relative(to).generic_string();
  };
  for (auto& r : manifest.records) {
    rebase(r.source.audio);
    rebase(r.source.asr_stack);
    rebase(r.source.ssl_stack);
  }
}

void write_manifest(std::ostream& os, const Manifest& manifest) {
  manifest.validate();
  os << "# utterance_id\tpatient_id\tsplit\ttask\tsource\tg\tr\tb\ta\ts\tgrade_class\n";
  if (!manifest.tag.empty()) os << "# dataset=" << manifest.tag << '\n';
  for (const auto& r : manifest.records) {
    os << r.utterance_id << '\t' << r.patient_id << '\t' << split_name(r.split) << '\t'
       << label_task_name(r.task) << '\t' << r.source.serialize();
    for (std::size_t k = 0; k < 5; ++k) {
      os << '\t';
      if (r.grbas) os << format_double((*r.grbas)[k]);
    }
    os << '\t';
    if (r.grade_class) os << *r.grade_class;
    os << '\n';
  }
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  write_manifest(out, manifest);
  if (!out) throw std::runtime_error("write failed for manifest " + path.string());
}

void SegmentSpec::validate() const {
  if (!(min_s > 0.0 && min_s <= max_s))
    throw std::invalid_argument("segment spec: need 0 < min_s <= max_s, got min_s=" +
                                format_double(min_s) + " max_s=" + format_double(max_s));
}

std::vector<Waveform> segment_running_speech(const Waveform& wave, const SegmentSpec& spec) {
  spec.validate();
  wave.validate();
  const double sr = wave.sample_rate;
  const auto min_n = static_cast<std::size_t>(std::ceil(spec.min_s * sr - 1e-9));
  const auto max_n = static_cast<std::size_t>(std::floor(spec.max_s * sr + 1e-9));
  if (wave.samples.size() < min_n)
    throw std::invalid_argument("segment: input of " + format_double(wave.duration_seconds()) +
                                " s is shorter than min_s " + format_double(spec.min_s) + " s");
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> length(min_n, max_n);
  std::vector<Waveform> out;
  std::size_t pos = 0;
  while (wave.samples.size() - pos >= min_n) {
    const std::size_t n = std::min(length(rng), wave.samples.size() - pos);
    Waveform seg;
    seg.sample_rate = wave.sample_rate;
    seg.samples.assign(wave.samples.begin() + pos, wave.samples.begin() + pos + n);
    out.push_back(std::move(seg));
    pos += n;
  }
  return out;
}

std::vector<Waveform> combine_vowels(const VowelTakes& takes) {
  if (takes.a.empty()) throw std::invalid_argument("combine_vowels: no /a/ take");
  const std::pair<const char*, const std::optional<Waveform>*> rest[] = {
      {"/i/", &takes.i}, {"/u/", &takes.u}, {"/e/", &takes.e}, {"/o/", &takes.o}};
  for (const auto& [name, w] : rest)
    if (!*w) throw std::invalid_argument(std::string("combine_vowels: missing vowel ") + name);
  const int rate = takes.a[0].sample_rate;
  auto check_rate = [&](const Waveform& w, const std::string& name) {
    w.validate();
    if (w.sample_rate != rate)
      throw std::invalid_argument("combine_vowels: " + name + " has sample rate " +
                                  std::to_string(w.sample_rate) + ", expected " +
                                  std::to_string(rate));
  };
  for (const auto& [name, w] : rest) check_rate(**w, name);
  std::vector<Waveform> out;
  for (const auto& a : takes.a) {
    check_rate(a, "/a/");
    Waveform u;
    u.sample_rate = rate;
    u.samples = a.samples;
    for (const auto& [name, w] : rest)
      u.samples.insert(u.samples.end(), (*w)->samples.begin(), (*w)->samples.end());
    out.push_back(std::move(u));
  }
  return out;
}

std::array<double, 5> average_rater_labels(const std::vector<std::array<double, 5>>& ratings) {
  if (ratings.empty()) throw std::invalid_argument("average_rater_labels: no ratings");
  std::array<double, 5> sum{};
  for (std::size_t r = 0; r < ratings.size(); ++r) {
    for (std::size_t k = 0; k < 5; ++k) {
      const double v = ratings[r][k];
      if (!(v >= 0.0 && v <= 3.0))
        throw std::invalid_argument("average_rater_labels: rater " + std::to_string(r) + " " +
                                    kGrbasNames[k] + " rating " + format_double(v) +
                                    " outside [0,3]");
      sum[k] += v;
    }
  }
  for (double& v : sum) v /= static_cast<double>(ratings.size());
  return sum;
}

Manifest split_by_patient(const Manifest& input, const SplitPlan& plan, std::uint64_t seed,
                          SplitSummary* summary) {
  if (plan.ratios.has_value() == plan.counts.has_value())
    throw std::invalid_argument("split: give exactly one of ratios or counts");
  std::set<std::string> unique;
  for (const auto& r : input.records) unique.insert(r.patient_id);
  std::vector<std::string> patients(unique.begin(), unique.end());
  const std::size_t n = patients.size();
  if (n == 0) throw std::invalid_argument("split: manifest has no records");

  std::size_t n_val = 0, n_test = 0;
  if (plan.ratios) {
    const auto& r = *plan.ratios;
    for (double v : r)
      if (!(v >= 0.0)) throw std::invalid_argument("split: ratios must be non-negative");
    if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-6)
      throw std::invalid_argument("split: ratios must sum to 1");
    n_val = static_cast<std::size_t>(std::floor(r[1] * n + 1e-9));
    n_test = static_cast<std::size_t>(std::floor(r[2] * n + 1e-9));
  } else {
    const auto& c = *plan.counts;
    if (c[0] + c[1] + c[2] != n)
      throw std::invalid_argument("split: patient counts sum to " +
                                  std::to_string(c[0] + c[1] + c[2]) + " but the manifest has " +
                                  std::to_string(n) + " patients");
    n_val = c[1];
    n_test = c[2];
  }

  std::mt19937_64 rng(seed);
  std::shuffle(patients.begin(), patients.end(), rng);
  std::map<std::string, Split> assign;
  for (std::size_t i = 0; i < n; ++i)
    assign[patients[i]] = i < n_val ? Split::kVal : i < n_val + n_test ? Split::kTest : Split::kTrain;

  Manifest out = input;
  SplitSummary s;
  for (auto& r : out.records) {
    r.split = assign.at(r.patient_id);
    ++s.utterances[static_cast<std::size_t>(r.split)];
  }
  for (const auto& [p, split] : assign) ++s.patients[static_cast<std::size_t>(split)];
  if (n == 1) s.warnings.push_back("only one patient; all utterances assigned to train");
  else
    for (Split sp : {Split::kVal, Split::kTest})
      if (s.patients[static_cast<std::size_t>(sp)] == 0)
        s.warnings.push_back(std::string(split_name(sp)) + " split is empty");
  out.validate();
  if (summary) *summary = std::move(s);
  return out;
}

double synth_degradation(std::size_t patient, std::size_t n_patients) {
  if (n_patients < 2) return 0.0;
  return 3.0 * static_cast<double>(patient) / static_cast<double>(n_patients - 1);
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string padded(std::size_t v, int width) {
  std::string s = std::to_string(v);
  return std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

Waveform synth_tone(double d, std::size_t patient, std::uint64_t seed, double duration_s) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int sr = kCanonicalSampleRate;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sr));
  const double f0 = 110.0 + 15.0 * static_cast<double>(patient % 6) + 5.0 * unit(rng);
  constexpr int kHarmonics = 6;
  std::array<double, kHarmonics> phase{};
  for (double& p : phase) p = std::numbers::pi * unit(rng);
  const double severity = d / 3.0;
  const auto period = static_cast<std::size_t>(sr / f0);

  Waveform w;
  w.sample_rate = sr;
  w.samples.resize(n);
  double gain = 1.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (t % period == 0) gain = 1.0 + 0.4 * severity * unit(rng);
    const double time = static_cast<double>(t) / sr;
    double s = 0.0;
    for (int k = 1; k <= kHarmonics; ++k)
      s += std::sin(2.0 * std::numbers::pi * k * f0 * time + phase[k - 1]) / k;
    s = 0.3 * gain * s + 0.15 * severity * gauss(rng);
    w.samples[t] = static_cast<float>(std::clamp(s, -0.99, 0.99));
  }
  return w;
}

}  // namespace

Manifest synth_dataset(const SynthConfig& config, const std::filesystem::path& out_dir) {
  if (config.n_patients == 0 || config.utt_per_patient == 0)
    throw std::invalid_argument("synth: patient and utterance counts must be positive");
  if (!(config.duration_s > 0.0)) throw std::invalid_argument("synth: duration must be positive");

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> offset(-0.25, 0.25);
  std::array<double, 5> offsets{};
  for (std::size_t k = 1; k < 5; ++k) offsets[k] = offset(rng);

  Manifest m;
  m.tag = "synthetic";
  for (std::size_t p = 0; p < config.n_patients; ++p) {
    const double d = synth_degradation(p, config.n_patients);
    std::array<double, 5> labels{};
    for (std::size_t k = 0; k < 5; ++k) labels[k] = std::clamp(d + offsets[k], 0.0, 3.0);
    const std::string patient = "p" + padded(p, 3);
    for (std::size_t u = 0; u < config.utt_per_patient; ++u) {
      UtteranceRecord r;
      r.patient_id = patient;
      r.utterance_id = patient + "_u" + padded(u, 2);
      r.split = Split::kTrain;
      r.task = config.task;
      r.source.audio = (std::filesystem::path(config.audio_dir) / (r.utterance_id + ".wav")).generic_string();
      r.grbas = labels;
      r.grade_class = bin_grade(d);
      const std::uint64_t s = splitmix(config.seed ^ splitmix(p * 1000003ULL + u));
      write_wav(out_dir / r.source.audio, synth_tone(d, p, s, config.duration_s));
      m.records.push_back(std::move(r));
    }
  }
  m.validate();
  return m;
}

}  // namespace voxgrade
