// voxgrade/src/model.cc

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

#include "voxgrade/model.h"

#include <stdexcept>

namespace voxgrade {

const char* encoder_mode_name(EncoderMode mode) {
  return mode == EncoderMode::kToy ? "toy" : "import";
}

EncoderMode parse_encoder_mode(const std::string& name) {
  if (name == "toy") return EncoderMode::kToy;
  if (name == "import") return EncoderMode::kImport;
  throw std::invalid_argument("unknown encoder mode '" + name + "'");
}

std::size_t ModelConfig::encoder_layers() const {
  return encoder == EncoderMode::kToy ? toy.n_layers : stack_layers;
}

std::size_t ModelConfig::encoder_dim() const {
  return encoder == EncoderMode::kToy ? toy.model_dim : stack_dim;
}

void ModelConfig::validate() const {
  if (encoder == EncoderMode::kToy) {
    toy.validate();
    if (toy.input_dim != n_mels)
      throw std::invalid_argument("model: toy encoder input_dim must equal n_mels");
  }
  const std::size_t L = encoder_layers();
  if (L < 2 || L % 2 != 0)
    throw std::invalid_argument("model: encoder layer count must be even and >= 2");
  if (encoder_dim() == 0 || n_mels == 0 || adapter_dim == 0 || hidden == 0)
    throw std::invalid_argument("model: zero-sized dimension");
}

namespace {

template <typename T, typename Init>
ModelParams<T> build_params(const ModelConfig& config, Init& init,
                            Init& asr_init, Init& ssl_init) {
  config.validate();
  ModelParams<T> p;
  p.config = config;
  if (config.encoder == EncoderMode::kToy) {
    p.asr_encoder = make_toy_encoder<T>(config.toy, asr_init);
    p.ssl_encoder = make_toy_encoder<T>(config.toy, ssl_init);
  }
  const std::size_t deep = config.encoder_layers() / 2;
  p.asr = make_stream_fusion<T>(init, deep, config.encoder_dim(), config.adapter_dim);
  p.ssl = make_stream_fusion<T>(init, deep, config.encoder_dim(), config.adapter_dim);
  p.head = HeadParams<T>::make(init, config.fused_dim(), config.hidden,
                               output_dim(config.task));
  return p;
}

}  // namespace

ModelParams<float> init_params(const ModelConfig& config) {
  RandomInit<float> init(config.seed);
  RandomInit<float> asr_init(config.toy.seed);
  RandomInit<float> ssl_init(config.toy.seed + 1);
  return build_params<float>(config, init, asr_init, ssl_init);
}

template <typename T>
ModelParams<T> allocate_params(const ModelConfig& config) {
  ZeroInit<T> init;
  return build_params<T>(config, init, init, init);
}

template <typename T>
Tensor<T> model_forward(const ModelParams<T>& params, const UtteranceInput<T>& input) {
  const ModelConfig& cfg = params.config;
  const T slope = static_cast<T>(cfg.leaky_slope);
  if (!input.mel.defined() || input.mel.rank() != 2 || input.mel.dim(1) != 3 * cfg.n_mels)
    throw ShapeError("model_forward: mel features must be T x " +
                     std::to_string(3 * cfg.n_mels));

  RepresentationStack<T> asr_stack, ssl_stack;
  if (cfg.encoder == EncoderMode::kToy) {
    Tensor<T> base = input.base_mel.defined() ? input.base_mel
                                              : slice(input.mel, 1, 0, cfg.n_mels);
    asr_stack = toy_encode(base, *params.asr_encoder, cfg.toy, input.mel_frame_rate);
    ssl_stack = toy_encode(base, *params.ssl_encoder, cfg.toy, input.mel_frame_rate);
  } else {
    if (!input.asr || !input.ssl)
      throw std::invalid_argument("model_forward: import mode needs asr and ssl stacks");
    asr_stack = *input.asr;
    ssl_stack = *input.ssl;
  }
  Tensor<T> asr = fuse_stream(asr_stack, params.asr, slope);
  Tensor<T> ssl = fuse_stream(ssl_stack, params.ssl, slope);
  auto aligned = align_frames<T>({asr, ssl, input.mel});
  Tensor<T> fused = fuse_features(aligned[0], aligned[1], aligned[2]);
  return head_forward(fused, params.head, HeadConfig{cfg.task});
}

template ModelParams<float> allocate_params(const ModelConfig&);
template ModelParams<double> allocate_params(const ModelConfig&);
template Tensor<float> model_forward(const ModelParams<float>&,
                                     const UtteranceInput<float>&);
template Tensor<double> model_forward(const ModelParams<double>&,
                                      const UtteranceInput<double>&);

}  // namespace voxgrade
