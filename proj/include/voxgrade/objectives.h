// voxgrade/objectives.h

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

#ifndef VOXGRADE_OBJECTIVES_H_
#define VOXGRADE_OBJECTIVES_H_

#include <span>

#include "voxgrade/tensor.h"

namespace voxgrade {

/// Mean over K of |pred_k - target_k|.
template <typename T>
Tensor<T> mae_loss(const Tensor<T>& pred, const Tensor<T>& target);

// Index of the largest probability; ties go to the lowest index.
template <typename T>
std::size_t predicted_class(std::span<const T> probs);

/// Simplified class-distance-weighted cross entropy:
///   -ln(probs[c]) * |i - c|,  i = argmax(probs).
/// The distance factor is a constant (no gradient through the argmax). A
/// positive `distance_floor` replaces |i - c| by max(|i - c|, floor); the
/// default 0 keeps the loss exactly zero on correctly classified samples.
template <typename T>
Tensor<T> scdw_ce_loss(const Tensor<T>& probs, std::size_t true_class,
                       double distance_floor = 0.0);

}  // namespace voxgrade

#endif  // VOXGRADE_OBJECTIVES_H_
