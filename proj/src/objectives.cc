// voxgrade/src/objectives.cc

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

#include "voxgrade/objectives.h"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace voxgrade {

template <typename T>
Tensor<T> mae_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape())
    throw ShapeError("mae_loss: length mismatch " + to_string(pred.shape()) +
                     " vs " + to_string(target.shape()));
  return mean_all(abs_diff(pred, target));
}

template <typename T>
std::size_t predicted_class(std::span<const T> probs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < probs.size(); ++k)
    if (probs[k] > probs[best]) best = k;
  return best;
}

template <typename T>
Tensor<T> scdw_ce_loss(const Tensor<T>& probs, std::size_t true_class,
                       double distance_floor) {
  if (probs.rank() != 1 || true_class >= probs.numel())
    throw std::invalid_argument("scdw_ce_loss: class " + std::to_string(true_class) +
                                " invalid for probabilities of shape " +
                                to_string(probs.shape()));
  const T p_true = probs.data()[true_class];
  if (!(p_true > T(0)))
    throw std::invalid_argument("scdw_ce_loss: probability of the true class is " +
                                std::to_string(static_cast<double>(p_true)) +
                                ", must be > 0");
  const std::size_t predicted = predicted_class(probs.data());
  BranchMonitor::note(static_cast<int>(predicted));
  const double distance = predicted > true_class ? double(predicted - true_class)
                                                 : double(true_class - predicted);
  const T weight = static_cast<T>(std::max(distance, distance_floor));
  // 0 - log(p) * w, so that w = 0 gives +0 rather than -0.
  Tensor<T> weighted = scale(log(slice(probs, 0, true_class, true_class + 1)), weight);
  return mean_all(sub(Tensor<T>::scalar(T(0)), weighted));
}

template Tensor<float> mae_loss(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> mae_loss(const Tensor<double>&, const Tensor<double>&);
template std::size_t predicted_class(std::span<const float>);
template std::size_t predicted_class(std::span<const double>);
template Tensor<float> scdw_ce_loss(const Tensor<float>&, std::size_t, double);
template Tensor<double> scdw_ce_loss(const Tensor<double>&, std::size_t, double);

}  // namespace voxgrade
