// voxgrade/trainer.h

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

#ifndef VOXGRADE_TRAINER_H_
#define VOXGRADE_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "voxgrade/datasets.h"
#include "voxgrade/mel.h"
#include "voxgrade/model.h"

namespace voxgrade {

enum class LossKind { kMae, kScdw };
const char* loss_kind_name(LossKind kind);
LossKind default_loss(Task task);

struct TrainConfig {
  double lr0 = 1e-4;
  std::size_t plateau_patience = 4;
  double lr_factor = 0.5;
  std::size_t batch_size = 1;
  // Required: there is no default epoch budget.
  std::size_t max_epochs = 0;
  std::uint64_t seed = 0;
  Task task = Task::kGrbasSingle;
  LossKind loss = LossKind::kMae;
  double distance_floor = 0.0;
  // A validation loss counts as an improvement when < best - epsilon.
  double improvement_epsilon = 1e-8;

  void validate() const;
};

/// Halves the learning rate once `patience` consecutive epochs fail to
/// improve on the best loss seen before them. The stagnation counter resets
/// on improvement and after each halving.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr0, double factor, std::size_t patience, double epsilon = 1e-8);

  // Feeds one epoch's validation loss; true when a halving fires.
  bool observe(double val_loss);
  double lr() const { return lr_; }
  std::size_t halvings() const { return halvings_; }
  double best() const { return best_; }
  bool last_improved() const { return last_improved_; }

 private:
  double lr_, factor_, epsilon_;
  std::size_t patience_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t stagnant_ = 0;
  std::size_t halvings_ = 0;
  bool last_improved_ = false;
};

// 1-based epochs after which a halving fires for a validation-loss history.
std::vector<std::size_t> plateau_schedule(std::span<const double> history,
                                          std::size_t patience = 4, double epsilon = 1e-8);

// p <- p - lr * g on every tensor; throws if a tensor holds no gradient.
void sgd_step(std::span<Tensor<float>> params, double lr);
void sgd_step(ModelParams<float>& params, double lr);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;  // after this epoch's schedule update
  std::size_t halvings = 0;
};

// `epoch,train_loss,val_loss,lr`
void write_epoch_record(std::ostream& os, const EpochRecord& record);
std::string epoch_stream_header();

struct Checkpoint {
  ModelParams<float> params;
  TrainConfig train;
  std::size_t epoch = 0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
};

/// CKPT: "CKPT", u32 version, u32 entry count, then per entry u16 name
/// length, name, u8 rank, u32 dims, float32 data. Model parameters are
/// stored under their visit() names; the configuration, epoch and
/// validation loss are stored as JSON text in the `meta.json` entry (one
/// byte per float).
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// One utterance prepared for the model: cached mel features (and imported
/// stacks) plus its targets.
struct Example {
  std::string utterance_id, patient_id;
  UtteranceInput<float> input;
  std::vector<double> target;  // GRBAS targets for the regression tasks
  std::size_t true_class = 0;  // grade3
};

// Record -> example; relative paths resolve against base_dir.
Example make_example(const UtteranceRecord& record, const ModelConfig& config,
                     const std::filesystem::path& base_dir, const MelConfig& mel = {});
std::vector<Example> make_examples(const std::vector<UtteranceRecord>& records,
                                   const ModelConfig& config,
                                   const std::filesystem::path& base_dir,
                                   const MelConfig& mel = {});

Tensor<float> example_loss(const Tensor<float>& output, const Example& example,
                           const TrainConfig& config);
double mean_loss(const ModelParams<float>& params, const std::vector<Example>& examples,
                 const TrainConfig& config);

struct StepInfo {
  std::size_t epoch = 0;  // 1-based
  std::size_t step = 0;   // 0-based within the epoch
  double loss = 0.0;
  const ModelParams<float>* params = nullptr;  // after the update
};
using StepObserver = std::function<void(const StepInfo&)>;

struct TrainResult {
  std::vector<EpochRecord> history;
  Checkpoint best;
};

/// SGD with batch size 1 over a per-epoch seeded shuffle, plateau halving on
/// the validation loss, and a copy of the parameters at the best validation
/// epoch. `params` is updated in place.
TrainResult train(ModelParams<float>& params, const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set, const TrainConfig& config,
                  const StepObserver& observer = {},
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace voxgrade

#endif  // VOXGRADE_TRAINER_H_
