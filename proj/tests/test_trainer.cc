// voxgrade/tests/test_trainer.cc

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
#include <sstream>

#include "doctest.h"
#include "voxgrade/datasets.h"
#include "voxgrade/trainer.h"

using namespace voxgrade;
namespace fs = std::filesystem;

namespace {

ModelConfig tiny_model(Task task) {
  ModelConfig m;
  m.task = task;
  m.n_mels = 8;
  m.toy.n_layers = 2;
  m.toy.model_dim = 8;
  m.toy.n_heads = 2;
  m.toy.ff_dim = 8;
  m.toy.input_dim = 8;
  m.toy.seed = 3;
  m.adapter_dim = 6;
  m.hidden = 4;
  m.seed = 5;
  return m;
}

struct Fixture {
  fs::path dir;
  std::vector<Example> examples;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    x.dir = fs::temp_directory_path() / "voxgrade_test_trainer";
    fs::remove_all(x.dir);
    SynthConfig cfg;
    cfg.n_patients = 3;
    cfg.utt_per_patient = 2;
    cfg.duration_s = 0.2;
    auto m = synth_dataset(cfg, x.dir);
    MelConfig mel;
    mel.n_mels = 8;
    x.examples = make_examples(m.records, tiny_model(Task::kGrbasSingle), x.dir, mel);
    return x;
  }();
  return f;
}

TrainConfig train_config(std::size_t epochs) {
  TrainConfig t;
  t.max_epochs = epochs;
  t.lr0 = 1e-3;
  t.seed = 9;
  return t;
}

}  // namespace

TEST_CASE("sgd step arithmetic") {
  auto p = Tensor<float>::from({1}, {1.0f}, true);
  p.mutable_grad()[0] = 2.0f;
  std::vector<Tensor<float>> ps{p};
  sgd_step(ps, 0.1);
  CHECK(p.at(0) == doctest::Approx(0.8));
  p.mutable_grad()[0] = 0.0f;
  sgd_step(ps, 0.1);
  CHECK(p.at(0) == doctest::Approx(0.8));

  auto a = Tensor<float>::from({2}, {0.5f, -1.0f}, true), b = a.clone();
  std::vector<Tensor<float>> va{a}, vb{b};
  for (auto* t : {&a, &b}) {
    t->mutable_grad()[0] = 0.25f;
    t->mutable_grad()[1] = -0.5f;
  }
  sgd_step(va, 0.01);
  sgd_step(va, 0.01);
  sgd_step(vb, 0.02);
  CHECK(a.at(0) == doctest::Approx(b.at(0)).epsilon(1e-6));
  CHECK(a.at(1) == doctest::Approx(b.at(1)).epsilon(1e-6));

  auto params = init_params(tiny_model(Task::kGrbasSingle));
  CHECK_THROWS_WITH_AS(sgd_step(params, 0.1), doctest::Contains("asr_encoder.input.weight"),
                       std::invalid_argument);
}

TEST_CASE("plateau schedule traces") {
  std::vector<double> flat{1, 1, 1, 1, 1};
  CHECK(plateau_schedule(flat) == std::vector<std::size_t>{5});
  std::vector<double> bumpy{1.0, 1.1, 0.9, 1.1, 1.1, 1.1, 1.1};
  CHECK(plateau_schedule(bumpy) == std::vector<std::size_t>{7});
  std::vector<double> improving{5, 4, 3, 2, 1, 0.5, 0.25, 0.1};
  CHECK(plateau_schedule(improving).empty());
  std::vector<double> nine(9, 2.0);
  CHECK(plateau_schedule(nine).size() == 2);

  PlateauScheduler s(1e-4, 0.5, 4);
  for (double v : nine) s.observe(v);
  CHECK(s.halvings() == 2);
  CHECK(s.lr() == 1e-4 * 0.25);
}

TEST_CASE("training with a frozen loss halves twice in nine epochs") {
  auto params = init_params(tiny_model(Task::kGrbasSingle));
  TrainConfig cfg = train_config(9);
  cfg.lr0 = 1e-30;
  auto result = train(params, fixture().examples, fixture().examples, cfg);
  REQUIRE(result.history.size() == 9);
  CHECK(result.history.back().halvings == 2);
  for (const auto& e : result.history)
    CHECK(e.lr == doctest::Approx(1e-30 * std::pow(0.5, static_cast<double>(e.halvings))));
}

TEST_CASE("training is deterministic and reduces loss") {
  auto run = [] {
    auto params = init_params(tiny_model(Task::kGrbasSingle));
    return train(params, fixture().examples, fixture().examples, train_config(3));
  };
  auto a = run(), b = run();
  REQUIRE(a.history.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(a.history[e].train_loss == b.history[e].train_loss);
    CHECK(a.history[e].val_loss == b.history[e].val_loss);
  }
  CHECK(a.history.back().val_loss < a.history.front().train_loss);
  CHECK(a.best.val_loss == doctest::Approx(a.history.back().val_loss));
}

TEST_CASE("train rejects empty splits and bad config") {
  auto params = init_params(tiny_model(Task::kGrbasSingle));
  CHECK_THROWS_AS(train(params, {}, fixture().examples, train_config(1)), std::invalid_argument);
  CHECK_THROWS_AS(train(params, fixture().examples, {}, train_config(1)), std::invalid_argument);
  CHECK_THROWS_AS(train(params, fixture().examples, fixture().examples, train_config(0)),
                  std::invalid_argument);
}

TEST_CASE("step observer sees every update") {
  auto params = init_params(tiny_model(Task::kGrbasSingle));
  std::size_t steps = 0;
  train(params, fixture().examples, fixture().examples, train_config(2), [&](const StepInfo& s) {
    ++steps;
    CHECK(s.params != nullptr);
    CHECK(std::isfinite(s.loss));
  });
  CHECK(steps == 2 * fixture().examples.size());
}

TEST_CASE("checkpoint round trip") {
  auto params = init_params(tiny_model(Task::kGrbasSingle));
  auto result = train(params, fixture().examples, fixture().examples, train_config(2));
  const fs::path p = fixture().dir / "model.ckpt";
  save_checkpoint(p, result.best);
  Checkpoint back = load_checkpoint(p);
  CHECK(back.epoch == result.best.epoch);
  CHECK(back.val_loss == result.best.val_loss);
  CHECK(back.train.seed == 9);
  CHECK(mean_loss(back.params, fixture().examples, back.train) ==
        mean_loss(result.best.params, fixture().examples, result.best.train));

  const auto size = fs::file_size(p);
  fs::copy_file(p, fixture().dir / "cut.ckpt", fs::copy_options::overwrite_existing);
  fs::resize_file(fixture().dir / "cut.ckpt", size - 3);
  CHECK_THROWS_AS(load_checkpoint(fixture().dir / "cut.ckpt"), std::runtime_error);
  std::ofstream(fixture().dir / "junk.ckpt") << "nope";
  CHECK_THROWS_AS(load_checkpoint(fixture().dir / "junk.ckpt"), std::runtime_error);
}

TEST_CASE("losses by task") {
  const auto& ex = fixture().examples.front();
  TrainConfig cfg = train_config(1);
  auto out = Tensor<float>::from({1}, {static_cast<float>(ex.target[0]) + 0.5f});
  CHECK(example_loss(out, ex, cfg).item() == doctest::Approx(0.5));
  CHECK(default_loss(Task::kGrade3) == LossKind::kScdw);
  CHECK(default_loss(Task::kGrbasMulti) == LossKind::kMae);
  std::ostringstream os;
  write_epoch_record(os, EpochRecord{1, 0.5, 0.25, 1e-4, 0});
  CHECK(epoch_stream_header() == "epoch,train_loss,val_loss,lr");
  CHECK(os.str().rfind("1,0.5,0.25,", 0) == 0);
}
