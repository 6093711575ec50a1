// voxgrade/model.h

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

#ifndef VOXGRADE_MODEL_H_
#define VOXGRADE_MODEL_H_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "voxgrade/fusion.h"
#include "voxgrade/head.h"
#include "voxgrade/representation.h"

namespace voxgrade {

enum class EncoderMode { kToy, kImport };

const char* encoder_mode_name(EncoderMode mode);
EncoderMode parse_encoder_mode(const std::string& name);

struct ModelConfig {
  Task task = Task::kGrbasSingle;
  EncoderMode encoder = EncoderMode::kToy;
  // Toy mode: both streams use this shape. The SSL encoder is seeded with
  // toy.seed + 1.
  EncoderConfig toy;
  // Import mode: depth and width of the stored activation stacks.
  std::size_t stack_layers = 12;
  std::size_t stack_dim = 768;
  std::size_t n_mels = 80;
  std::size_t adapter_dim = kAdapterDim;
  std::size_t hidden = 128;
  double leaky_slope = kLeakySlope;
  std::uint64_t seed = 0;

  std::size_t encoder_layers() const;
  std::size_t encoder_dim() const;
  std::size_t fused_dim() const { return 2 * adapter_dim + 3 * n_mels; }
  void validate() const;
};

/// Every trainable tensor of the model. Copies share the underlying tensors.
template <typename T>
struct ModelParams {
  ModelConfig config;
  std::optional<ToyEncoderParams<T>> asr_encoder, ssl_encoder;
  StreamFusionParams<T> asr, ssl;
  HeadParams<T> head;

  // Visits (name, tensor) in a fixed order.
  template <typename F>
  void visit(F&& f) {
    if (asr_encoder) asr_encoder->visit("asr_encoder", f);
    if (ssl_encoder) ssl_encoder->visit("ssl_encoder", f);
    asr.visit("asr", f);
    ssl.visit("ssl", f);
    head.visit("head", f);
  }
  std::vector<std::pair<std::string, Tensor<T>>> named() const;
  std::size_t count() const;
  void zero_grad();

  // Deep copy in another precision.
  template <typename U>
  ModelParams<U> cast() const;
};

ModelParams<float> init_params(const ModelConfig& config);
// Correctly shaped zero parameters, for loading or casting into.
template <typename T>
ModelParams<T> allocate_params(const ModelConfig& config);

/// Model input for one utterance. `mel` is [log-mel | delta | delta-delta];
/// `base_mel` (first n_mels columns) feeds the toy encoders; `asr` and `ssl`
/// are the imported stacks (import mode only).
template <typename T>
struct UtteranceInput {
  Tensor<T> mel;
  Tensor<T> base_mel;
  double mel_frame_rate = 100.0;
  std::optional<RepresentationStack<T>> asr, ssl;

  template <typename U>
  UtteranceInput<U> cast() const;
};

/// Encoders (toy) or imported stacks -> per-stream adapters and layer
/// weighting -> frame alignment -> [asr | ssl | mel] -> head. Returns the
/// head output (GRBAS scores or grade3 class probabilities).
template <typename T>
Tensor<T> model_forward(const ModelParams<T>& params, const UtteranceInput<T>& input);

// ---------------------------------------------------------------------------

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> ModelParams<T>::named() const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  const_cast<ModelParams*>(this)->visit(
      [&](const std::string& name, Tensor<T>& t) { out.emplace_back(name, t); });
  return out;
}

template <typename T>
std::size_t ModelParams<T>::count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t.numel();
  return n;
}

template <typename T>
void ModelParams<T>::zero_grad() {
  visit([](const std::string&, Tensor<T>& t) { t.zero_grad(); });
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  ModelParams<U> out = allocate_params<U>(config);
  auto src = named();
  std::size_t i = 0;
  out.visit([&](const std::string&, Tensor<U>& dst) {
    auto s = src[i++].second.data();
    std::copy(s.begin(), s.end(), dst.mutable_data().begin());
  });
  return out;
}

template <typename T>
template <typename U>
UtteranceInput<U> UtteranceInput<T>::cast() const {
  UtteranceInput<U> out;
  if (mel.defined()) out.mel = mel.template cast<U>();
  if (base_mel.defined()) out.base_mel = base_mel.template cast<U>();
  out.mel_frame_rate = mel_frame_rate;
  auto cast_stack = [](const RepresentationStack<T>& s) {
    RepresentationStack<U> r;
    r.source = s.source;
    r.frame_rate = s.frame_rate;
    for (const auto& l : s.layers) r.layers.push_back(l.template cast<U>());
    return r;
  };
  if (asr) out.asr = cast_stack(*asr);
  if (ssl) out.ssl = cast_stack(*ssl);
  return out;
}

}  // namespace voxgrade

#endif  // VOXGRADE_MODEL_H_
