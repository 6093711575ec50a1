// voxgrade/representation.h

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

#ifndef VOXGRADE_REPRESENTATION_H_
#define VOXGRADE_REPRESENTATION_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "voxgrade/layers.h"
#include "voxgrade/mel.h"
#include "voxgrade/tensor.h"

namespace voxgrade {

enum class StackSource { kToy, kImported };

// Per-layer encoder activations: `layers[l]` is a T x D tensor.
template <typename T>
struct RepresentationStack {
  std::vector<Tensor<T>> layers;
  StackSource source = StackSource::kImported;
  double frame_rate = 50.0;

  std::size_t num_layers() const { return layers.size(); }
  std::size_t num_frames() const { return layers.empty() ? 0 : layers[0].dim(0); }
  std::size_t dim() const { return layers.empty() ? 0 : layers[0].dim(1); }
  // L >= 2 and even, every layer T x D with identical T and D, finite values.
  void validate() const;
};

struct EncoderConfig {
  std::size_t n_layers = 12;
  std::size_t model_dim = 32;
  std::size_t n_heads = 4;
  std::size_t ff_dim = 64;
  std::size_t input_dim = 80;
  // Average-pools this many input frames into one encoder frame.
  std::size_t frame_stride = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

template <typename T>
struct EncoderLayerParams {
  AffineNorm<T> attn_norm;
  Tensor<T> w_query, w_key, w_value, w_out;
  AffineNorm<T> ff_norm;
  Linear<T> ff_in, ff_out;

  template <typename F>
  void visit(const std::string& p, F&& f) {
    attn_norm.visit(p + ".attn_norm", f);
    f(p + ".w_query", w_query);
    f(p + ".w_key", w_key);
    f(p + ".w_value", w_value);
    f(p + ".w_out", w_out);
    ff_norm.visit(p + ".ff_norm", f);
    ff_in.visit(p + ".ff_in", f);
    ff_out.visit(p + ".ff_out", f);
  }
};

template <typename T>
struct ToyEncoderParams {
  Linear<T> input;
  std::vector<EncoderLayerParams<T>> layers;

  template <typename F>
  void visit(const std::string& p, F&& f) {
    input.visit(p + ".input", f);
    for (std::size_t l = 0; l < layers.size(); ++l)
      layers[l].visit(p + ".layer" + std::to_string(l), f);
  }
};

template <typename T, typename Init>
ToyEncoderParams<T> make_toy_encoder(const EncoderConfig& cfg, Init& init) {
  cfg.validate();
  const std::size_t d = cfg.model_dim;
  ToyEncoderParams<T> p;
  p.input = Linear<T>::make(init, cfg.input_dim, d, glorot_bound(cfg.input_dim, d));
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    EncoderLayerParams<T> layer;
    const double b = glorot_bound(d, d);
    layer.attn_norm = AffineNorm<T>::make(init, d);
    layer.w_query = init.uniform({d, d}, b);
    layer.w_key = init.uniform({d, d}, b);
    layer.w_value = init.uniform({d, d}, b);
    layer.w_out = init.uniform({d, d}, b);
    layer.ff_norm = AffineNorm<T>::make(init, d);
    layer.ff_in = Linear<T>::make(init, d, cfg.ff_dim, glorot_bound(d, cfg.ff_dim));
    layer.ff_out = Linear<T>::make(init, cfg.ff_dim, d, glorot_bound(cfg.ff_dim, d));
    p.layers.push_back(std::move(layer));
  }
  return p;
}

// Seeded toy encoder parameters (uses cfg.seed).
ToyEncoderParams<float> init_toy_encoder(const EncoderConfig& cfg);

/// Small pre-norm transformer encoder standing in for a pre-trained model.
/// Input frames are projected to model_dim, average-pooled by frame_stride,
/// offset by sinusoidal positions, then passed through n_layers blocks of
/// x += attn(norm(x)); x += ff(norm(x)). Every block output is returned.
template <typename T>
RepresentationStack<T> toy_encode(const Tensor<T>& features,
                                  const ToyEncoderParams<T>& params,
                                  const EncoderConfig& cfg,
                                  double input_frame_rate);

RepresentationStack<float> toy_encode(const FeatureMatrix& features,
                                      const ToyEncoderParams<float>& params,
                                      const EncoderConfig& cfg);

/// RSTK: little-endian "RSTK", u32 version (1), u32 L, u32 T, u32 D, then
/// L*T*D float32 in [layer][frame][dim] order.
void export_stack(const std::filesystem::path& path,
                  const RepresentationStack<float>& stack);
RepresentationStack<float> import_stack(const std::filesystem::path& path,
                                        double frame_rate = 50.0);

/// Keeps the leading `valid_frames` frames of every layer.
template <typename T>
RepresentationStack<T> trim_padding(const RepresentationStack<T>& stack,
                                    std::size_t valid_frames);

// Frames of real audio at the encoder rate, ceil(duration * rate).
std::size_t valid_frame_count(double duration_seconds, double frame_rate);

/// Linearly resamples every stream along time (axis 0) to the shortest
/// stream's length. Endpoints map to endpoints; streams already at the
/// target length are returned unchanged.
template <typename T>
std::vector<Tensor<T>> align_frames(const std::vector<Tensor<T>>& streams);

std::vector<FeatureMatrix> align_frames(const std::vector<FeatureMatrix>& streams);

// The (target x source) linear interpolation matrix used by align_frames.
std::vector<double> interpolation_weights(std::size_t source, std::size_t target);

// Feature matrix <-> constant tensor.
template <typename T>
Tensor<T> to_tensor(const FeatureMatrix& m);

}  // namespace voxgrade

#endif  // VOXGRADE_REPRESENTATION_H_
