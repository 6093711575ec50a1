// voxgrade/src/fusion.cc

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

#include "voxgrade/fusion.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace voxgrade {

template <typename T>
std::vector<Tensor<T>> select_deep_layers(const RepresentationStack<T>& stack) {
  const std::size_t L = stack.num_layers();
  if (L < 2 || L % 2 != 0)
    throw std::invalid_argument("select_deep_layers: layer count " +
                                std::to_string(L) + " is not even");
  return {stack.layers.begin() + static_cast<std::ptrdiff_t>(L / 2),
          stack.layers.end()};
}

template <typename T>
Tensor<T> adapter_forward(const Tensor<T>& slice, const AdapterParams<T>& params,
                          T slope) {
  if (slice.rank() != 2 || slice.dim(1) != params.fc.weight.dim(0))
    throw ShapeError("adapter_forward: input " + to_string(slice.shape()) +
                     " does not match weight " + to_string(params.fc.weight.shape()));
  return params.norm(leaky_relu(params.fc(slice), slope));
}

template <typename T>
Tensor<T> weighted_layer_sum(const std::vector<Tensor<T>>& adapted,
                             const Tensor<T>& logits) {
  if (logits.rank() != 1 || adapted.size() != logits.numel())
    throw std::invalid_argument("weighted_layer_sum: " + std::to_string(adapted.size()) +
                                " slices but logits of shape " +
                                to_string(logits.shape()));
  for (const auto& a : adapted)
    if (a.shape() != adapted[0].shape())
      throw ShapeError("weighted_layer_sum: slice shapes differ: " +
                       to_string(a.shape()) + " vs " + to_string(adapted[0].shape()));
  Tensor<T> weights = softmax(logits, 0);
  Tensor<T> total;
  for (std::size_t k = 0; k < adapted.size(); ++k) {
    Tensor<T> term = mul(adapted[k], slice(weights, 0, k, k + 1));
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

std::vector<double> layer_weights(const Tensor<float>& logits) {
  auto d = logits.data();
  const double mx = *std::max_element(d.begin(), d.end());
  std::vector<double> w(d.size());
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) total += w[i] = std::exp(d[i] - mx);
  for (auto& v : w) v /= total;
  return w;
}

template <typename T>
Tensor<T> fuse_stream(const RepresentationStack<T>& stack,
                      const StreamFusionParams<T>& params, T slope) {
  auto deep = select_deep_layers(stack);
  if (deep.size() != params.adapters.size())
    throw std::invalid_argument("fuse_stream: " + std::to_string(deep.size()) +
                                " deep layers but " +
                                std::to_string(params.adapters.size()) + " adapters");
  std::vector<Tensor<T>> adapted;
  for (std::size_t k = 0; k < deep.size(); ++k)
    adapted.push_back(adapter_forward(deep[k], params.adapters[k], slope));
  return weighted_layer_sum(adapted, params.layer_logits);
}

template <typename T>
Tensor<T> fuse_features(const Tensor<T>& asr, const Tensor<T>& ssl,
                        const Tensor<T>& mel) {
  if (asr.dim(0) != ssl.dim(0) || asr.dim(0) != mel.dim(0))
    throw ShapeError("fuse_features: unequal frame counts " +
                     std::to_string(asr.dim(0)) + ", " + std::to_string(ssl.dim(0)) +
                     ", " + std::to_string(mel.dim(0)));
  return concat(std::vector<Tensor<T>>{asr, ssl, mel}, 1);
}

#define VOXGRADE_INSTANTIATE(T)                                                  \
  template std::vector<Tensor<T>> select_deep_layers(const RepresentationStack<T>&); \
  template Tensor<T> adapter_forward(const Tensor<T>&, const AdapterParams<T>&, T); \
  template Tensor<T> weighted_layer_sum(const std::vector<Tensor<T>>&,          \
                                        const Tensor<T>&);                       \
  template Tensor<T> fuse_stream(const RepresentationStack<T>&,                 \
                                 const StreamFusionParams<T>&, T);              \
  template Tensor<T> fuse_features(const Tensor<T>&, const Tensor<T>&,          \
                                   const Tensor<T>&);

VOXGRADE_INSTANTIATE(float)
VOXGRADE_INSTANTIATE(double)

#undef VOXGRADE_INSTANTIATE

}  // namespace voxgrade
