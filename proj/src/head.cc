// voxgrade/src/head.cc

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

#include "voxgrade/head.h"

#include <stdexcept>

namespace voxgrade {

std::size_t output_dim(Task task) {
  switch (task) {
    case Task::kGrbasSingle: return 1;
    case Task::kGrbasMulti: return 5;
    case Task::kGrade3: return 3;
  }
  return 0;
}

const char* task_name(Task task) {
  switch (task) {
    case Task::kGrbasSingle: return "grbas-single";
    case Task::kGrbasMulti: return "grbas-multi";
    case Task::kGrade3: return "grade3";
  }
  return "unknown";
}

Task parse_task(const std::string& name) {
  if (name == "grbas-single") return Task::kGrbasSingle;
  if (name == "grbas-multi") return Task::kGrbasMulti;
  if (name == "grade3") return Task::kGrade3;
  throw std::invalid_argument("unknown task '" + name + "'");
}

template <typename T>
Tensor<T> lstm_forward(const Tensor<T>& x, const LstmParams<T>& params) {
  if (x.rank() != 2 || x.dim(1) != params.w_input.dim(0))
    throw ShapeError("lstm_forward: input " + to_string(x.shape()) +
                     " does not match w_input " + to_string(params.w_input.shape()));
  const std::size_t H = params.hidden();
  const std::size_t frames = x.dim(0);
  // Input contributions for all frames at once.
  Tensor<T> projected = add(matmul(x, params.w_input), params.bias);
  Tensor<T> h = Tensor<T>::zeros({1, H}), c = Tensor<T>::zeros({1, H});
  std::vector<Tensor<T>> outputs;
  outputs.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    Tensor<T> gates = slice(projected, 0, t, t + 1);
    gates = add(gates, matmul(h, params.w_hidden));
    Tensor<T> in_gate = sigmoid(slice(gates, 1, 0, H));
    Tensor<T> forget = sigmoid(slice(gates, 1, H, 2 * H));
    Tensor<T> candidate = tanh(slice(gates, 1, 2 * H, 3 * H));
    Tensor<T> out_gate = sigmoid(slice(gates, 1, 3 * H, 4 * H));
    Tensor<T> update = mul(in_gate, candidate);
    c = add(mul(forget, c), update);
    h = mul(out_gate, tanh(c));
    outputs.push_back(h);
  }
  return frames == 1 ? outputs[0] : concat(outputs, 0);
}

template <typename T>
Tensor<T> head_forward(const Tensor<T>& fused, const HeadParams<T>& params,
                       const HeadConfig& cfg) {
  if (fused.rank() != 2 || fused.dim(0) == 0)
    throw ShapeError("head_forward: expected T x D input with T >= 1");
  if (params.fc.weight.dim(1) != cfg.output_dim())
    throw std::invalid_argument(std::string("head_forward: FC width does not match task ") +
                                task_name(cfg.task));
  Tensor<T> h = lstm_forward(lstm_forward(fused, params.lstm1), params.lstm2);
  Tensor<T> pooled = mean(params.fc(h), 0);
  return cfg.task == Task::kGrade3 ? softmax(pooled, 0) : pooled;
}

template Tensor<float> lstm_forward(const Tensor<float>&, const LstmParams<float>&);
template Tensor<double> lstm_forward(const Tensor<double>&, const LstmParams<double>&);
template Tensor<float> head_forward(const Tensor<float>&, const HeadParams<float>&,
                                    const HeadConfig&);
template Tensor<double> head_forward(const Tensor<double>&, const HeadParams<double>&,
                                     const HeadConfig&);

}  // namespace voxgrade
