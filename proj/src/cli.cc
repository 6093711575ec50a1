// voxgrade/src/cli.cc

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

#include "voxgrade/cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "voxgrade/audio.h"
#include "voxgrade/datasets.h"
#include "voxgrade/evaluation.h"
#include "voxgrade/grad_suite.h"
#include "voxgrade/trainer.h"

namespace voxgrade {

namespace fs = std::filesystem;

namespace {

const std::map<std::string, Task> kTaskMap = {{"grbas-single", Task::kGrbasSingle},
                                              {"grbas-multi", Task::kGrbasMulti},
                                              {"grade3", Task::kGrade3}};
const std::map<std::string, EncoderMode> kEncoderMap = {{"toy", EncoderMode::kToy},
                                                        {"import", EncoderMode::kImport}};

LabelTask label_task_of(Task task) {
  return task == Task::kGrade3 ? LabelTask::kGrade3 : LabelTask::kGrbas;
}

template <typename T, std::size_t N>
std::array<T, N> parse_triple(const std::string& text, const char* what) {
  std::array<T, N> out{};
  std::stringstream ss(text);
  std::string cell;
  std::size_t i = 0;
  while (std::getline(ss, cell, ',')) {
    if (i == N) break;
    std::istringstream cs(cell);
    if (!(cs >> out[i]) || !cs.eof())
      throw std::invalid_argument(std::string("bad ") + what + " '" + text + "'");
    ++i;
  }
  if (i != N || ss.rdbuf()->in_avail() > 0)
    throw std::invalid_argument(std::string(what) + " needs " + std::to_string(N) +
                                " comma-separated values, got '" + text + "'");
  return out;
}

struct Common {
  std::string workdir = ".";
  fs::path path(const std::string& p) const {
    fs::path q(p);
    return q.is_absolute() ? q : fs::path(workdir) / q;
  }
};

struct SynthArgs {
  std::string out_dir = "synth", manifest;
  std::size_t patients = 10, utt = 4;
  std::uint64_t seed = 0;
  double duration = 1.0;
  std::string task = "grbas-single";
};

struct SegmentArgs {
  std::string input, out_dir = "segments";
  double min_s = 2.0, max_s = 4.0;
  std::uint64_t seed = 0;
};

struct CombineArgs {
  std::vector<std::string> a;
  std::string i, u, e, o, out_dir = "combined", prefix = "utt";
};

struct SplitArgs {
  std::string manifest, out, ratios = "0.6,0.2,0.2", counts;
  std::uint64_t seed = 0;
};

struct ModelArgs {
  std::string task = "grbas-single", encoder = "toy";
  std::size_t hidden = 128, toy_layers = 12, toy_dim = 32, toy_heads = 4, toy_ff = 64;
  std::size_t stack_layers = 12, stack_dim = 768, n_mels = 80;
};

struct TrainArgs {
  std::string manifest, checkpoint = "model.ckpt", history = "history.csv", val_split = "val";
  std::uint64_t seed = 0;
  std::size_t max_epochs = 0;
  double lr = 1e-4, distance_floor = 0.0;
  ModelArgs model;
};

struct EvalArgs {
  std::string manifest, checkpoint = "model.ckpt", split = "test", out = "predictions.csv";
};

struct GradArgs {
  std::uint64_t seed = 7;
  std::size_t points = 100, pipeline_cases = 100;
  double rtol = 1e-3;
};

struct ScatterArgs {
  std::string input, out = "scatter.csv", level = "patient";
};

void add_model_flags(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--task", m.task, "Model task")
      ->check(CLI::IsMember({"grbas-single", "grbas-multi", "grade3"}));
  cmd->add_option("--encoder", m.encoder, "Representation source")
      ->check(CLI::IsMember({"toy", "import"}));
  cmd->add_option("--hidden", m.hidden, "LSTM hidden size");
  cmd->add_option("--toy-layers", m.toy_layers, "Toy encoder depth (even)");
  cmd->add_option("--toy-dim", m.toy_dim, "Toy encoder width");
  cmd->add_option("--toy-heads", m.toy_heads, "Toy encoder attention heads");
  cmd->add_option("--toy-ff", m.toy_ff, "Toy encoder feed-forward width");
  cmd->add_option("--stack-layers", m.stack_layers, "Imported stack depth");
  cmd->add_option("--stack-dim", m.stack_dim, "Imported stack width");
  cmd->add_option("--n-mels", m.n_mels, "Mel bins");
}

ModelConfig model_config(const ModelArgs& m, std::uint64_t seed) {
  ModelConfig c;
  c.task = kTaskMap.at(m.task);
  c.encoder = kEncoderMap.at(m.encoder);
  c.hidden = m.hidden;
  c.n_mels = m.n_mels;
  c.toy.n_layers = m.toy_layers;
  c.toy.model_dim = m.toy_dim;
  c.toy.n_heads = m.toy_heads;
  c.toy.ff_dim = m.toy_ff;
  c.toy.input_dim = m.n_mels;
  c.toy.seed = seed + 1000;
  c.stack_layers = m.stack_layers;
  c.stack_dim = m.stack_dim;
  c.seed = seed;
  c.validate();
  return c;
}

int do_synth(const Common& common, const SynthArgs& a, std::ostream& out) {
  SynthConfig c;
  c.n_patients = a.patients;
  c.utt_per_patient = a.utt;
  c.seed = a.seed;
  c.duration_s = a.duration;
  c.task = label_task_of(kTaskMap.at(a.task));
  const fs::path dir = common.path(a.out_dir);
  const Manifest m = synth_dataset(c, dir);
  const fs::path manifest = a.manifest.empty() ? dir / "manifest.tsv" : common.path(a.manifest);
  write_manifest(manifest, m);
  out << "synth: " << m.records.size() << " utterances from " << a.patients << " patients -> "
      << manifest.string() << '\n';
  return 0;
}

std::string padded(std::size_t v) {
  std::ostringstream os;
  os << std::setw(3) << std::setfill('0') << v;
  return os.str();
}

int do_segment(const Common& common, const SegmentArgs& a, std::ostream& out) {
  const fs::path input = common.path(a.input);
  const Waveform wave = read_wav(input);
  const auto segments = segment_running_speech(wave, {a.min_s, a.max_s, a.seed});
  const fs::path dir = common.path(a.out_dir);
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const fs::path p = dir / (input.stem().string() + "_seg" + padded(k) + ".wav");
    write_wav(p, segments[k]);
    out << p.string() << '\t' << format_double(segments[k].duration_seconds()) << '\n';
  }
  out << "segment: " << segments.size() << " segments\n";
  return 0;
}

int do_combine(const Common& common, const CombineArgs& a, std::ostream& out) {
  VowelTakes takes;
  for (const auto& p : a.a) takes.a.push_back(read_wav(common.path(p)));
  auto load = [&](const std::string& p) {
    return p.empty() ? std::optional<Waveform>() : std::optional<Waveform>(read_wav(common.path(p)));
  };
  takes.i = load(a.i);
  takes.u = load(a.u);
  takes.e = load(a.e);
  takes.o = load(a.o);
  const auto utts = combine_vowels(takes);
  const fs::path dir = common.path(a.out_dir);
  for (std::size_t k = 0; k < utts.size(); ++k) {
    const fs::path p = dir / (a.prefix + padded(k) + ".wav");
    write_wav(p, utts[k]);
    out << p.string() << '\t' << format_double(utts[k].duration_seconds()) << '\n';
  }
  out << "combine-vowels: " << utts.size() << " utterances\n";
  return 0;
}

int do_split(const Common& common, const SplitArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path in = common.path(a.manifest);
  const Manifest m = read_manifest(in);
  SplitPlan plan;
  if (!a.counts.empty()) plan.counts = parse_triple<std::size_t, 3>(a.counts, "--counts");
  else plan.ratios = parse_triple<double, 3>(a.ratios, "--ratios");
  SplitSummary s;
  Manifest split = split_by_patient(m, plan, a.seed, &s);
  const fs::path dst = a.out.empty() ? in : common.path(a.out);
  rebase_sources(split, in.parent_path(), dst.parent_path());
  write_manifest(dst, split);
  for (const auto& w : s.warnings) err << "warning: " << w << '\n';
  for (Split sp : {Split::kTrain, Split::kVal, Split::kTest}) {
    const auto i = static_cast<std::size_t>(sp);
    out << split_name(sp) << ".patients=" << s.patients[i] << '\n'
        << split_name(sp) << ".utterances=" << s.utterances[i] << '\n';
  }
  return 0;
}

std::vector<Example> load_split(const Common& common, const std::string& manifest_path,
                                Split split, const ModelConfig& cfg) {
  const fs::path path = common.path(manifest_path);
  const Manifest m = read_manifest(path);
  const auto records = m.select(split);
  if (records.empty())
    throw std::invalid_argument(std::string(split_name(split)) + " split of " + path.string() +
                                " is empty");
  return make_examples(records, cfg, path.parent_path());
}

int do_train(const Common& common, const TrainArgs& a, std::ostream& out) {
  const ModelConfig cfg = model_config(a.model, a.seed);
  TrainConfig tc;
  tc.lr0 = a.lr;
  tc.max_epochs = a.max_epochs;
  tc.seed = a.seed;
  tc.task = cfg.task;
  tc.loss = default_loss(cfg.task);
  tc.distance_floor = a.distance_floor;
  tc.validate();

  const auto train_set = load_split(common, a.manifest, Split::kTrain, cfg);
  const auto val_set = a.val_split == "train" ? train_set
                                              : load_split(common, a.manifest, Split::kVal, cfg);
  ModelParams<float> params = init_params(cfg);

  const fs::path history_path = common.path(a.history);
  if (history_path.has_parent_path()) fs::create_directories(history_path.parent_path());
  std::ofstream history(history_path);
  if (!history) throw std::runtime_error("cannot write " + history_path.string());
  history << epoch_stream_header() << '\n';
  out << epoch_stream_header() << '\n';
  TrainResult result = train(params, train_set, val_set, tc, {}, [&](const EpochRecord& r) {
    write_epoch_record(history, r);
    write_epoch_record(out, r);
  });
  save_checkpoint(common.path(a.checkpoint), result.best);
  out << "train: best epoch " << result.best.epoch << " val_loss "
      << format_double(result.best.val_loss) << " -> " << common.path(a.checkpoint).string()
      << '\n';
  return 0;
}

int do_evaluate(const Common& common, const EvalArgs& a, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(common.path(a.checkpoint));
  const Split split = parse_split(a.split);
  const auto examples = load_split(common, a.manifest, split, ckpt.params.config);
  const auto preds = predict(ckpt.params, examples);
  out << "split=" << split_name(split) << '\n';
  out << "loss=" << format_double(mean_loss(ckpt.params, examples, ckpt.train)) << '\n';
  write_evaluation(out, evaluate(preds, ckpt.params.config.task));
  return 0;
}

int do_predict(const Common& common, const EvalArgs& a, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(common.path(a.checkpoint));
  const auto examples =
      load_split(common, a.manifest, parse_split(a.split), ckpt.params.config);
  const auto rows = scatter_rows(predict(ckpt.params, examples), ckpt.params.config.task);
  const fs::path dst = common.path(a.out);
  if (dst.has_parent_path()) fs::create_directories(dst.parent_path());
  std::ofstream os(dst);
  if (!os) throw std::runtime_error("cannot write " + dst.string());
  write_scatter_csv(os, rows);
  out << "predict: " << examples.size() << " utterances -> " << dst.string() << '\n';
  return 0;
}

int do_gradcheck(const GradArgs& a, std::ostream& out) {
  GradSuiteOptions o;
  o.seed = a.seed;
  o.points_per_primitive = a.points;
  o.pipeline_cases = a.pipeline_cases;
  o.rtol = a.rtol;
  const GradSuiteResult r = run_grad_suite(o);
  std::map<std::string, std::pair<std::size_t, double>> by_name;
  std::vector<std::string> order;
  for (const auto& c : r.cases) {
    if (!by_name.count(c.name)) order.push_back(c.name);
    auto& [n, worst] = by_name[c.name];
    ++n;
    worst = std::max(worst, c.report.max_rel_error);
    if (!c.report.passed) out << "FAIL " << c.name << " #" << c.point << ' ' << c.report.summary() << '\n';
  }
  for (const auto& name : order)
    out << name << " cases=" << by_name[name].first
        << " max_rel_error=" << format_double(by_name[name].second) << '\n';
  out << "gradcheck: " << r.cases.size() - r.failures << '/' << r.cases.size() << " passed in "
      << std::fixed << std::setprecision(1) << r.seconds << " s\n";
  if (!r.passed()) throw std::runtime_error("gradcheck: " + std::to_string(r.failures) + " failures");
  return 0;
}

int do_export_scatter(const Common& common, const ScatterArgs& a, std::ostream& out) {
  const fs::path in = common.path(a.input);
  std::ifstream is(in);
  if (!is) throw std::runtime_error("cannot open " + in.string());
  auto rows = read_scatter_csv(is);
  if (a.level == "patient") rows = patient_scatter_rows(rows);
  const fs::path dst = common.path(a.out);
  if (dst.has_parent_path()) fs::create_directories(dst.parent_path());
  std::ofstream os(dst);
  if (!os) throw std::runtime_error("cannot write " + dst.string());
  write_scatter_csv(os, rows);
  out << "export-scatter: " << rows.size() << ' ' << a.level << " rows -> " << dst.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Voice quality grading from fused speech representations", "voxgrade"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--workdir", common.workdir, "Root for every relative path");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic labelled corpus");
  c_synth->add_option("--out-dir", synth.out_dir, "Output directory");
  c_synth->add_option("--manifest", synth.manifest, "Manifest path (default <out-dir>/manifest.tsv)");
  c_synth->add_option("--patients", synth.patients, "Number of patients")->check(CLI::PositiveNumber);
  c_synth->add_option("--utt", synth.utt, "Utterances per patient")->check(CLI::PositiveNumber);
  c_synth->add_option("--seed", synth.seed, "Random seed");
  c_synth->add_option("--duration", synth.duration, "Utterance length in seconds");
  c_synth->add_option("--task", synth.task, "Label task of the records")
      ->check(CLI::IsMember({"grbas-single", "grbas-multi", "grade3"}));

  SegmentArgs seg;
  auto* c_seg = app.add_subcommand("segment", "Cut running speech into 2-4 s segments");
  c_seg->add_option("--input", seg.input, "Input WAV")->required();
  c_seg->add_option("--out-dir", seg.out_dir, "Output directory");
  c_seg->add_option("--min-s", seg.min_s, "Shortest segment (s)");
  c_seg->add_option("--max-s", seg.max_s, "Longest segment (s)");
  c_seg->add_option("--seed", seg.seed, "Random seed");

  CombineArgs comb;
  auto* c_comb = app.add_subcommand("combine-vowels", "Join each /a/ take with /i/ /u/ /e/ /o/");
  c_comb->add_option("--a", comb.a, "/a/ takes (repeatable)")->required();
  c_comb->add_option("--i", comb.i, "/i/ WAV");
  c_comb->add_option("--u", comb.u, "/u/ WAV");
  c_comb->add_option("--e", comb.e, "/e/ WAV");
  c_comb->add_option("--o", comb.o, "/o/ WAV");
  c_comb->add_option("--out-dir", comb.out_dir, "Output directory");
  c_comb->add_option("--prefix", comb.prefix, "Output file prefix");

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "Assign patients to train/val/test");
  c_split->add_option("--manifest", split.manifest, "Input manifest")->required();
  c_split->add_option("--out", split.out, "Output manifest (default: overwrite input)");
  c_split->add_option("--ratios", split.ratios, "train,val,test patient ratios");
  c_split->add_option("--counts", split.counts, "train,val,test patient counts (overrides ratios)");
  c_split->add_option("--seed", split.seed, "Random seed");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a model and save the best checkpoint");
  c_train->add_option("--manifest", tr.manifest, "Manifest")->required();
  c_train->add_option("--checkpoint", tr.checkpoint, "Output checkpoint");
  c_train->add_option("--history", tr.history, "Epoch stream output (epoch,train_loss,val_loss,lr)");
  c_train->add_option("--seed", tr.seed, "Random seed");
  c_train->add_option("--max-epochs", tr.max_epochs, "Epoch budget")->required()->check(CLI::PositiveNumber);
  c_train->add_option("--lr", tr.lr, "Initial learning rate");
  c_train->add_option("--distance-floor", tr.distance_floor, "Floor on |i-c| in the grade3 loss");
  c_train->add_option("--val-split", tr.val_split, "Split used for validation")
      ->check(CLI::IsMember({"val", "train"}));
  add_model_flags(c_train, tr.model);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Utterance- and patient-level metrics");
  c_eval->add_option("--manifest", ev.manifest, "Manifest")->required();
  c_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint");
  c_eval->add_option("--split", ev.split, "Split to evaluate")
      ->check(CLI::IsMember({"train", "val", "test"}));

  EvalArgs pr;
  auto* c_pred = app.add_subcommand("predict", "Write utterance predictions as scatter CSV");
  c_pred->add_option("--manifest", pr.manifest, "Manifest")->required();
  c_pred->add_option("--checkpoint", pr.checkpoint, "Checkpoint");
  c_pred->add_option("--split", pr.split, "Split to predict")
      ->check(CLI::IsMember({"train", "val", "test"}));
  c_pred->add_option("--out", pr.out, "Output CSV");

  GradArgs gc;
  auto* c_grad = app.add_subcommand("gradcheck", "Run the gradient check suite");
  c_grad->add_option("--seed", gc.seed, "Random seed");
  c_grad->add_option("--points", gc.points, "Random points per primitive");
  c_grad->add_option("--pipeline-cases", gc.pipeline_cases, "End-to-end toy model cases");
  c_grad->add_option("--rtol", gc.rtol, "Relative error tolerance");

  ScatterArgs sc;
  auto* c_scatter = app.add_subcommand("export-scatter", "Convert predictions to a scatter CSV");
  c_scatter->add_option("--input", sc.input, "Prediction CSV from predict")->required();
  c_scatter->add_option("--out", sc.out, "Output CSV");
  c_scatter->add_option("--level", sc.level, "Aggregation level")
      ->check(CLI::IsMember({"utterance", "patient"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 2;
  }

  try {
    if (c_synth->parsed()) return do_synth(common, synth, out);
    if (c_seg->parsed()) return do_segment(common, seg, out);
    if (c_comb->parsed()) return do_combine(common, comb, out);
    if (c_split->parsed()) return do_split(common, split, out, err);
    if (c_train->parsed()) return do_train(common, tr, out);
    if (c_eval->parsed()) return do_evaluate(common, ev, out);
    if (c_pred->parsed()) return do_predict(common, pr, out);
    if (c_grad->parsed()) return do_gradcheck(gc, out);
    if (c_scatter->parsed()) return do_export_scatter(common, sc, out);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << '\n';
    return 1;
  }
  return 2;
}

}  // namespace voxgrade
