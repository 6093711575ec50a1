// voxgrade/src/trainer.cc

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

#include "voxgrade/trainer.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "voxgrade/metrics.h"
#include "voxgrade/objectives.h"

namespace voxgrade {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

const char* loss_kind_name(LossKind kind) { return kind == LossKind::kMae ? "mae" : "scdw-ce"; }

LossKind default_loss(Task task) {
  return task == Task::kGrade3 ? LossKind::kScdw : LossKind::kMae;
}

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw std::invalid_argument("train: lr0 must be > 0");
  if (!(lr_factor > 0.0 && lr_factor < 1.0))
    throw std::invalid_argument("train: lr_factor must be in (0,1)");
  if (plateau_patience < 1) throw std::invalid_argument("train: patience must be >= 1");
  if (batch_size != 1) throw std::invalid_argument("train: only batch size 1 is supported");
  if (max_epochs < 1) throw std::invalid_argument("train: max_epochs is required (>= 1)");
  if (!(distance_floor >= 0.0)) throw std::invalid_argument("train: distance_floor must be >= 0");
  if ((loss == LossKind::kScdw) != (task == Task::kGrade3))
    throw std::invalid_argument(std::string("train: loss ") + loss_kind_name(loss) +
                                " does not fit task " + task_name(task));
}

PlateauScheduler::PlateauScheduler(double lr0, double factor, std::size_t patience,
                                   double epsilon)
    : lr_(lr0), factor_(factor), epsilon_(epsilon), patience_(patience) {
  if (patience < 1) throw std::invalid_argument("plateau schedule: patience must be >= 1");
}

bool PlateauScheduler::observe(double val_loss) {
  last_improved_ = val_loss < best_ - epsilon_;
  if (last_improved_) {
    best_ = val_loss;
    stagnant_ = 0;
    return false;
  }
  if (++stagnant_ < patience_) return false;
  lr_ *= factor_;
  ++halvings_;
  stagnant_ = 0;
  return true;
}

std::vector<std::size_t> plateau_schedule(std::span<const double> history, std::size_t patience,
                                          double epsilon) {
  PlateauScheduler s(1.0, 0.5, patience, epsilon);
  std::vector<std::size_t> fired;
  for (std::size_t e = 0; e < history.size(); ++e)
    if (s.observe(history[e])) fired.push_back(e + 1);
  return fired;
}

void sgd_step(std::span<Tensor<float>> params, double lr) {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!params[i].has_grad())
      throw std::invalid_argument("sgd_step: parameter " + std::to_string(i) + " has no gradient");
  const float step = static_cast<float>(lr);
  for (auto& p : params) {
    auto g = p.grad();
    auto d = p.mutable_data();
    for (std::size_t k = 0; k < d.size(); ++k) d[k] -= step * g[k];
  }
}

void sgd_step(ModelParams<float>& params, double lr) {
  std::vector<Tensor<float>> tensors;
  std::vector<std::string> names;
  params.visit([&](const std::string& name, Tensor<float>& t) {
    tensors.push_back(t);
    names.push_back(name);
  });
  for (std::size_t i = 0; i < tensors.size(); ++i)
    if (!tensors[i].has_grad())
      throw std::invalid_argument("sgd_step: parameter '" + names[i] + "' has no gradient");
  sgd_step(std::span<Tensor<float>>(tensors), lr);
}

std::string epoch_stream_header() { return "epoch,train_loss,val_loss,lr"; }

void write_epoch_record(std::ostream& os, const EpochRecord& r) {
  os << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss) << ','
     << format_double(r.lr) << '\n';
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

using nlohmann::json;

constexpr char kCheckpointMagic[4] = {'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr const char* kMetaEntry = "meta.json";

json model_config_json(const ModelConfig& c) {
  return {{"task", task_name(c.task)},
          {"encoder", encoder_mode_name(c.encoder)},
          {"toy",
           {{"n_layers", c.toy.n_layers},
            {"model_dim", c.toy.model_dim},
            {"n_heads", c.toy.n_heads},
            {"ff_dim", c.toy.ff_dim},
            {"input_dim", c.toy.input_dim},
            {"frame_stride", c.toy.frame_stride},
            {"seed", c.toy.seed}}},
          {"stack_layers", c.stack_layers},
          {"stack_dim", c.stack_dim},
          {"n_mels", c.n_mels},
          {"adapter_dim", c.adapter_dim},
          {"hidden", c.hidden},
          {"leaky_slope", c.leaky_slope},
          {"seed", c.seed}};
}

ModelConfig model_config_from(const json& j) {
  ModelConfig c;
  c.task = parse_task(j.at("task").get<std::string>());
  c.encoder = parse_encoder_mode(j.at("encoder").get<std::string>());
  const json& t = j.at("toy");
  t.at("n_layers").get_to(c.toy.n_layers);
  t.at("model_dim").get_to(c.toy.model_dim);
  t.at("n_heads").get_to(c.toy.n_heads);
  t.at("ff_dim").get_to(c.toy.ff_dim);
  t.at("input_dim").get_to(c.toy.input_dim);
  t.at("frame_stride").get_to(c.toy.frame_stride);
  t.at("seed").get_to(c.toy.seed);
  j.at("stack_layers").get_to(c.stack_layers);
  j.at("stack_dim").get_to(c.stack_dim);
  j.at("n_mels").get_to(c.n_mels);
  j.at("adapter_dim").get_to(c.adapter_dim);
  j.at("hidden").get_to(c.hidden);
  j.at("leaky_slope").get_to(c.leaky_slope);
  j.at("seed").get_to(c.seed);
  return c;
}

json train_config_json(const TrainConfig& c) {
  return {{"lr0", c.lr0},
          {"plateau_patience", c.plateau_patience},
          {"lr_factor", c.lr_factor},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"seed", c.seed},
          {"task", task_name(c.task)},
          {"loss", loss_kind_name(c.loss)},
          {"distance_floor", c.distance_floor},
          {"improvement_epsilon", c.improvement_epsilon}};
}

TrainConfig train_config_from(const json& j) {
  TrainConfig c;
  j.at("lr0").get_to(c.lr0);
  j.at("plateau_patience").get_to(c.plateau_patience);
  j.at("lr_factor").get_to(c.lr_factor);
  j.at("batch_size").get_to(c.batch_size);
  j.at("max_epochs").get_to(c.max_epochs);
  j.at("seed").get_to(c.seed);
  c.task = parse_task(j.at("task").get<std::string>());
  const std::string loss = j.at("loss").get<std::string>();
  if (loss == "mae") c.loss = LossKind::kMae;
  else if (loss == "scdw-ce") c.loss = LossKind::kScdw;
  else throw std::runtime_error("checkpoint: unknown loss '" + loss + "'");
  j.at("distance_floor").get_to(c.distance_floor);
  j.at("improvement_epsilon").get_to(c.improvement_epsilon);
  return c;
}

struct Entry {
  Shape shape;
  std::vector<float> data;
};

template <typename V>
void put(std::ostream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

void put_entry(std::ostream& os, const std::string& name, const Shape& shape,
               std::span<const float> data) {
  if (name.size() > 0xFFFF) throw std::invalid_argument("checkpoint: entry name too long");
  put<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  put<std::uint8_t>(os, static_cast<std::uint8_t>(shape.size()));
  for (std::size_t d : shape) put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  os.write(reinterpret_cast<const char*>(data.data()),
           static_cast<std::streamsize>(data.size() * sizeof(float)));
}

class Reader {
 public:
  Reader(std::vector<char> bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  template <typename V>
  V get(const char* what) {
    V v;
    read(&v, sizeof(V), what);
    return v;
  }
  void read(void* dst, std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n)
      throw std::runtime_error("checkpoint " + path_ + ": truncated reading " + what +
                               " at byte " + std::to_string(pos_) + " (need " +
                               std::to_string(n) + ", have " +
                               std::to_string(bytes_.size() - pos_) + ")");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::vector<char> bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto named = ckpt.params.named();
  json meta = {{"model", model_config_json(ckpt.params.config)},
               {"train", train_config_json(ckpt.train)},
               {"epoch", ckpt.epoch}};
  meta["val_loss"] = std::isfinite(ckpt.val_loss) ? json(ckpt.val_loss) : json(nullptr);
  const std::string text = meta.dump();
  const std::vector<float> text_bytes(text.begin(), text.end());

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(named.size() + 1));
  for (const auto& [name, t] : named) put_entry(out, name, t.shape(), t.data());
  put_entry(out, kMetaEntry, {text_bytes.size()}, text_bytes);
  if (!out) throw std::runtime_error("write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(bytes), path.string());

  char magic[4];
  r.read(magic, 4, "magic");
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw std::runtime_error("checkpoint " + path.string() + ": bad magic (not a CKPT file)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint " + path.string() + ": unsupported version " +
                             std::to_string(version));
  const auto count = r.get<std::uint32_t>("entry count");
  std::map<std::string, Entry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint16_t>("name length");
    std::string name(len, '\0');
    r.read(name.data(), len, "name");
    const auto rank = r.get<std::uint8_t>("rank");
    if (rank > 3)
      throw std::runtime_error("checkpoint " + path.string() + ": entry '" + name + "' has rank " +
                               std::to_string(rank));
    Entry e;
    for (std::uint8_t k = 0; k < rank; ++k) e.shape.push_back(r.get<std::uint32_t>("dims"));
    e.data.resize(numel(e.shape));
    r.read(e.data.data(), e.data.size() * sizeof(float), "data");
    if (!entries.emplace(name, std::move(e)).second)
      throw std::runtime_error("checkpoint " + path.string() + ": duplicate entry '" + name + "'");
  }
  if (!r.done())
    throw std::runtime_error("checkpoint " + path.string() + ": trailing bytes after byte " +
                             std::to_string(r.pos()));

  auto meta_it = entries.find(kMetaEntry);
  if (meta_it == entries.end())
    throw std::runtime_error("checkpoint " + path.string() + ": missing " + kMetaEntry);
  const std::string text(meta_it->second.data.begin(), meta_it->second.data.end());
  entries.erase(meta_it);

  Checkpoint ckpt;
  try {
    const json meta = json::parse(text);
    const ModelConfig cfg = model_config_from(meta.at("model"));
    ckpt.train = train_config_from(meta.at("train"));
    meta.at("epoch").get_to(ckpt.epoch);
    if (!meta.at("val_loss").is_null()) meta.at("val_loss").get_to(ckpt.val_loss);
    ckpt.params = allocate_params<float>(cfg);
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint " + path.string() + ": bad metadata: " + e.what());
  }
  std::size_t used = 0;
  ckpt.params.visit([&](const std::string& name, Tensor<float>& t) {
    auto it = entries.find(name);
    if (it == entries.end())
      throw std::runtime_error("checkpoint " + path.string() + ": missing parameter '" + name + "'");
    if (it->second.shape != t.shape())
      throw std::runtime_error("checkpoint " + path.string() + ": parameter '" + name +
                               "' has shape " + to_string(it->second.shape) + ", expected " +
                               to_string(t.shape()));
    std::copy(it->second.data.begin(), it->second.data.end(), t.mutable_data().begin());
    ++used;
  });
  if (used != entries.size()) {
    for (const auto& [name, e] : entries) {
      bool known = false;
      for (const auto& [n, t] : ckpt.params.named()) known = known || n == name;
      if (!known)
        throw std::runtime_error("checkpoint " + path.string() + ": unexpected entry '" + name + "'");
    }
  }
  return ckpt;
}

// ---------------------------------------------------------------------------
// Examples

namespace {

constexpr double kAsrFrameRate = 50.0;
constexpr double kSslFrameRate = 50.0;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void check_stack(const RepresentationStack<float>& s, const ModelConfig& cfg,
                 const std::string& what) {
  if (s.num_layers() != cfg.stack_layers || s.dim() != cfg.stack_dim)
    throw std::invalid_argument(what + " stack is " + std::to_string(s.num_layers()) + " x " +
                                std::to_string(s.dim()) + ", model expects " +
                                std::to_string(cfg.stack_layers) + " x " +
                                std::to_string(cfg.stack_dim));
}

}  // namespace

Example make_example(const UtteranceRecord& record, const ModelConfig& config,
                     const std::filesystem::path& base_dir, const MelConfig& mel) {
  const std::string where = "utterance '" + record.utterance_id + "': ";
  Example ex;
  ex.utterance_id = record.utterance_id;
  ex.patient_id = record.patient_id;
  if (config.task == Task::kGrade3) {
    if (!record.grade_class) throw std::invalid_argument(where + "no grade class label");
    ex.true_class = *record.grade_class;
  } else {
    if (!record.grbas) throw std::invalid_argument(where + "no GRBAS labels");
    const std::size_t k = output_dim(config.task);
    ex.target.assign(record.grbas->begin(), record.grbas->begin() + k);
  }

  const Waveform wave = read_wav(resolve(base_dir, record.source.audio));
  MelConfig mc = mel;
  mc.n_mels = config.n_mels;
  const FeatureMatrix features = build_mel_features(wave, mc);
  ex.input.mel = to_tensor<float>(features);
  ex.input.base_mel = slice(ex.input.mel, 1, 0, config.n_mels);
  ex.input.mel_frame_rate = features.frame_rate;

  if (config.encoder == EncoderMode::kImport) {
    if (!record.source.has_stacks())
      throw std::invalid_argument(where + "import mode needs asr and ssl stacks in the source field");
    auto asr = import_stack(resolve(base_dir, record.source.asr_stack), kAsrFrameRate);
    const std::size_t valid = valid_frame_count(wave.duration_seconds(), kAsrFrameRate);
    if (asr.num_frames() > valid) asr = trim_padding(asr, valid);
    auto ssl = import_stack(resolve(base_dir, record.source.ssl_stack), kSslFrameRate);
    check_stack(asr, config, where + "asr");
    check_stack(ssl, config, where + "ssl");
    ex.input.asr = std::move(asr);
    ex.input.ssl = std::move(ssl);
  }
  return ex;
}

std::vector<Example> make_examples(const std::vector<UtteranceRecord>& records,
                                   const ModelConfig& config,
                                   const std::filesystem::path& base_dir, const MelConfig& mel) {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(make_example(r, config, base_dir, mel));
  return out;
}

Tensor<float> example_loss(const Tensor<float>& output, const Example& example,
                           const TrainConfig& config) {
  if (config.loss == LossKind::kScdw)
    return scdw_ce_loss(output, example.true_class, config.distance_floor);
  std::vector<float> target(example.target.begin(), example.target.end());
  const Shape shape{target.size()};
  return mae_loss(output, Tensor<float>::from(shape, std::move(target)));
}

double mean_loss(const ModelParams<float>& params, const std::vector<Example>& examples,
                 const TrainConfig& config) {
  if (examples.empty()) throw std::invalid_argument("mean_loss: no examples");
  double sum = 0.0;
  for (const auto& ex : examples)
    sum += example_loss(model_forward(params, ex.input), ex, config).item();
  return sum / static_cast<double>(examples.size());
}

// ---------------------------------------------------------------------------
// Training

namespace {

std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (epoch + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

TrainResult train(ModelParams<float>& params, const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set, const TrainConfig& config,
                  const StepObserver& observer,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  if (config.task != params.config.task)
    throw std::invalid_argument(std::string("train: config task ") + task_name(config.task) +
                                " but model task " + task_name(params.config.task));
  if (train_set.empty()) throw std::invalid_argument("train: training split is empty");
  if (val_set.empty()) throw std::invalid_argument("train: validation split is empty");

  PlateauScheduler schedule(config.lr0, config.lr_factor, config.plateau_patience,
                            config.improvement_epsilon);
  TrainResult result;
  result.best = {params.cast<float>(), config, 0, std::numeric_limits<double>::quiet_NaN()};

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(epoch_seed(config.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double total = 0.0;
    for (std::size_t step = 0; step < order.size(); ++step) {
      const Example& ex = train_set[order[step]];
      params.zero_grad();
      double value = 0.0;
      {
        Graph<float> graph;
        auto scope = graph.activate();
        Tensor<float> loss = example_loss(model_forward(params, ex.input), ex, config);
        value = loss.item();
        if (!std::isfinite(value))
          throw std::runtime_error("train: non-finite loss on '" + ex.utterance_id + "' at epoch " +
                                   std::to_string(epoch));
        graph.backward(loss);
      }
      sgd_step(params, schedule.lr());
      total += value;
      if (observer) observer({epoch, step, value, &params});
    }
    params.zero_grad();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(order.size());
    rec.val_loss = mean_loss(params, val_set, config);
    if (!std::isfinite(rec.val_loss))
      throw std::runtime_error("train: non-finite validation loss at epoch " + std::to_string(epoch));
    schedule.observe(rec.val_loss);
    if (schedule.last_improved()) result.best = {params.cast<float>(), config, epoch, rec.val_loss};
    rec.lr = schedule.lr();
    rec.halvings = schedule.halvings();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace voxgrade
