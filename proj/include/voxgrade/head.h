// voxgrade/head.h

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

#ifndef VOXGRADE_HEAD_H_
#define VOXGRADE_HEAD_H_

#include <cmath>
#include <string>

#include "voxgrade/layers.h"

namespace voxgrade {

enum class Task { kGrbasSingle, kGrbasMulti, kGrade3 };

std::size_t output_dim(Task task);
const char* task_name(Task task);
Task parse_task(const std::string& name);

struct HeadConfig {
  Task task = Task::kGrbasSingle;
  std::size_t output_dim() const { return voxgrade::output_dim(task); }
};

// Gate blocks are laid out [input | forget | candidate | output], each of
// width hidden, in the 4*hidden columns.
template <typename T>
struct LstmParams {
  Tensor<T> w_input;   // [in, 4H]
  Tensor<T> w_hidden;  // [H, 4H]
  Tensor<T> bias;      // [4H]

  std::size_t hidden() const { return w_hidden.dim(0); }

  template <typename Init>
  static LstmParams make(Init& init, std::size_t in, std::size_t hidden) {
    const double b = 1.0 / std::sqrt(static_cast<double>(hidden));
    return {init.uniform({in, 4 * hidden}, b), init.uniform({hidden, 4 * hidden}, b),
            init.uniform({4 * hidden}, b)};
  }
  template <typename F>
  void visit(const std::string& p, F&& f) {
    f(p + ".w_input", w_input);
    f(p + ".w_hidden", w_hidden);
    f(p + ".bias", bias);
  }
};

template <typename T>
struct HeadParams {
  LstmParams<T> lstm1, lstm2;
  Linear<T> fc;

  template <typename Init>
  static HeadParams make(Init& init, std::size_t in, std::size_t hidden,
                         std::size_t out) {
    HeadParams p;
    p.lstm1 = LstmParams<T>::make(init, in, hidden);
    p.lstm2 = LstmParams<T>::make(init, hidden, hidden);
    p.fc = Linear<T>::make(init, hidden, out, 1.0 / std::sqrt(static_cast<double>(hidden)));
    return p;
  }
  template <typename F>
  void visit(const std::string& p, F&& f) {
    lstm1.visit(p + ".lstm1", f);
    lstm2.visit(p + ".lstm2", f);
    fc.visit(p + ".fc", f);
  }
};

/// Unidirectional LSTM from zero initial state; returns all hidden states
/// as a T x H tensor.
template <typename T>
Tensor<T> lstm_forward(const Tensor<T>& x, const LstmParams<T>& params);

/// LSTM -> LSTM -> per-frame FC -> mean over time. For grade3 the pooled
/// logits go through a softmax. Returns a rank-1 tensor of output_dim values.
template <typename T>
Tensor<T> head_forward(const Tensor<T>& fused, const HeadParams<T>& params,
                       const HeadConfig& cfg);

}  // namespace voxgrade

#endif  // VOXGRADE_HEAD_H_
