// voxgrade/layers.h

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

#ifndef VOXGRADE_LAYERS_H_
#define VOXGRADE_LAYERS_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "voxgrade/tensor.h"

namespace voxgrade {

// Creates parameter tensors. RandomInit draws seeded uniform values,
// ZeroInit only allocates (used before loading or casting).
template <typename T>
class RandomInit {
 public:
  explicit RandomInit(std::uint64_t seed) : rng_(seed) {}
  Tensor<T> uniform(const Shape& shape, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<T> v(numel(shape));
    for (auto& x : v) x = static_cast<T>(dist(rng_));
    return Tensor<T>::from(shape, std::move(v), true);
  }
  Tensor<T> constant(const Shape& shape, double value) {
    return Tensor<T>::filled(shape, static_cast<T>(value), true);
  }

 private:
  std::mt19937_64 rng_;
};

template <typename T>
class ZeroInit {
 public:
  Tensor<T> uniform(const Shape& shape, double) {
    return Tensor<T>::zeros(shape, true);
  }
  Tensor<T> constant(const Shape& shape, double) {
    return Tensor<T>::zeros(shape, true);
  }
};

// x W + b with W of shape [in, out].
template <typename T>
struct Linear {
  Tensor<T> weight;
  Tensor<T> bias;

  template <typename Init>
  static Linear make(Init& init, std::size_t in, std::size_t out, double bound) {
    return {init.uniform({in, out}, bound), init.constant({out}, 0.0)};
  }
  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight);
    f(prefix + ".bias", bias);
  }
  Tensor<T> operator()(const Tensor<T>& x) const {
    return add(matmul(x, weight), bias);
  }
};

// Layer norm over the last axis followed by a per-feature gain and bias.
template <typename T>
struct AffineNorm {
  Tensor<T> gain;
  Tensor<T> bias;
  T epsilon = T(1e-5);

  template <typename Init>
  static AffineNorm make(Init& init, std::size_t dim) {
    return {init.constant({dim}, 1.0), init.constant({dim}, 0.0)};
  }
  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".gain", gain);
    f(prefix + ".bias", bias);
  }
  Tensor<T> operator()(const Tensor<T>& x) const {
    return add(mul(layer_norm(x, x.rank() - 1, epsilon), gain), bias);
  }
};

inline double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace voxgrade

#endif  // VOXGRADE_LAYERS_H_
