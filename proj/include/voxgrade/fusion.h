// voxgrade/fusion.h

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

#ifndef VOXGRADE_FUSION_H_
#define VOXGRADE_FUSION_H_

#include <string>
#include <vector>

#include "voxgrade/layers.h"
#include "voxgrade/representation.h"

namespace voxgrade {

inline constexpr std::size_t kAdapterDim = 120;
inline constexpr double kLeakySlope = 0.05;

// FC -> LeakyReLU -> LayerNorm over one encoder layer.
template <typename T>
struct AdapterParams {
  Linear<T> fc;
  AffineNorm<T> norm;

  template <typename F>
  void visit(const std::string& p, F&& f) {
    fc.visit(p + ".fc", f);
    norm.visit(p + ".norm", f);
  }
};

// One adapter per selected layer plus the softmax logits that weight them.
template <typename T>
struct StreamFusionParams {
  std::vector<AdapterParams<T>> adapters;
  Tensor<T> layer_logits;

  template <typename F>
  void visit(const std::string& p, F&& f) {
    for (std::size_t k = 0; k < adapters.size(); ++k)
      adapters[k].visit(p + ".adapter" + std::to_string(k), f);
    f(p + ".layer_logits", layer_logits);
  }
};

// Adapter weights uniform in +-sqrt(6 / (in + out)), zero biases, unit gains
// and zero logits.
template <typename T, typename Init>
StreamFusionParams<T> make_stream_fusion(Init& init, std::size_t n_adapters,
                                         std::size_t in_dim,
                                         std::size_t adapter_dim = kAdapterDim) {
  StreamFusionParams<T> p;
  for (std::size_t k = 0; k < n_adapters; ++k)
    p.adapters.push_back(
        {Linear<T>::make(init, in_dim, adapter_dim, glorot_bound(in_dim, adapter_dim)),
         AffineNorm<T>::make(init, adapter_dim)});
  p.layer_logits = init.constant({n_adapters}, 0.0);
  return p;
}

/// Layers L/2+1 .. L (1-based) of an even-depth stack, in order.
template <typename T>
std::vector<Tensor<T>> select_deep_layers(const RepresentationStack<T>& stack);

/// layer_norm(leaky_relu(x W + b)) * gain + bias, normalized per frame.
template <typename T>
Tensor<T> adapter_forward(const Tensor<T>& slice, const AdapterParams<T>& params,
                          T slope = T(kLeakySlope));

/// sum_k softmax(logits)_k * adapted_k.
template <typename T>
Tensor<T> weighted_layer_sum(const std::vector<Tensor<T>>& adapted,
                             const Tensor<T>& logits);

// softmax(logits) evaluated in double.
std::vector<double> layer_weights(const Tensor<float>& logits);

/// Deep-layer selection, adapters and weighted sum for one encoder stream.
template <typename T>
Tensor<T> fuse_stream(const RepresentationStack<T>& stack,
                      const StreamFusionParams<T>& params, T slope = T(kLeakySlope));

/// Column concatenation [asr | ssl | mel]; all three must share T.
template <typename T>
Tensor<T> fuse_features(const Tensor<T>& asr, const Tensor<T>& ssl,
                        const Tensor<T>& mel);

}  // namespace voxgrade

#endif  // VOXGRADE_FUSION_H_
