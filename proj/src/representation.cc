// voxgrade/src/representation.cc

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

#include "voxgrade/representation.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace voxgrade {

static_assert(std::endian::native == std::endian::little,
              "RSTK and checkpoint I/O assume a little-endian host");

template <typename T>
void RepresentationStack<T>::validate() const {
  if (layers.size() < 2 || layers.size() % 2 != 0)
    throw std::invalid_argument("representation stack: need an even layer count "
                                ">= 2, got " + std::to_string(layers.size()));
  const Shape& first = layers[0].shape();
  if (first.size() != 2)
    throw ShapeError("representation stack: layers must be T x D, got " +
                     to_string(first));
  for (const auto& l : layers) {
    if (l.shape() != first)
      throw ShapeError("representation stack: layer shape " +
                       to_string(l.shape()) + " differs from " + to_string(first));
    for (T v : l.data())
      if (!std::isfinite(v))
        throw std::invalid_argument("representation stack: non-finite value");
  }
}

void EncoderConfig::validate() const {
  if (n_layers < 2 || n_layers % 2 != 0)
    throw std::invalid_argument("encoder: n_layers must be even and >= 2");
  if (model_dim == 0 || n_heads == 0 || model_dim % n_heads != 0)
    throw std::invalid_argument("encoder: model_dim must be divisible by n_heads");
  if (ff_dim == 0 || input_dim == 0 || frame_stride == 0)
    throw std::invalid_argument("encoder: zero-sized dimension");
}

ToyEncoderParams<float> init_toy_encoder(const EncoderConfig& cfg) {
  RandomInit<float> init(cfg.seed);
  return make_toy_encoder<float>(cfg, init);
}

namespace {

template <typename T>
Tensor<T> pooling_matrix(std::size_t frames, std::size_t stride) {
  const std::size_t out = (frames + stride - 1) / stride;
  std::vector<T> w(out * frames, T(0));
  for (std::size_t j = 0; j < out; ++j) {
    const std::size_t begin = j * stride;
    const std::size_t end = std::min(frames, begin + stride);
    for (std::size_t i = begin; i < end; ++i)
      w[j * frames + i] = T(1) / T(end - begin);
  }
  return Tensor<T>::from({out, frames}, std::move(w));
}

template <typename T>
Tensor<T> sinusoidal_positions(std::size_t frames, std::size_t dim) {
  std::vector<T> pe(frames * dim);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t i = 0; i < dim; ++i) {
      const double rate =
          std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(t) * rate;
      pe[t * dim + i] = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  return Tensor<T>::from({frames, dim}, std::move(pe));
}

template <typename T>
Tensor<T> self_attention(const Tensor<T>& h, const EncoderLayerParams<T>& p,
                         std::size_t n_heads) {
  const std::size_t d = h.dim(1);
  const std::size_t head_dim = d / n_heads;
  const T inv_sqrt = T(1) / static_cast<T>(std::sqrt(static_cast<double>(head_dim)));
  Tensor<T> q = matmul(h, p.w_query);
  Tensor<T> k = matmul(h, p.w_key);
  Tensor<T> v = matmul(h, p.w_value);
  std::vector<Tensor<T>> heads;
  for (std::size_t i = 0; i < n_heads; ++i) {
    const std::size_t b = i * head_dim, e = b + head_dim;
    Tensor<T> scores =
        scale(matmul(slice(q, 1, b, e), transpose(slice(k, 1, b, e))), inv_sqrt);
    heads.push_back(matmul(softmax(scores, 1), slice(v, 1, b, e)));
  }
  Tensor<T> joined = n_heads == 1 ? heads[0] : concat(heads, 1);
  return matmul(joined, p.w_out);
}

}  // namespace

template <typename T>
RepresentationStack<T> toy_encode(const Tensor<T>& features,
                                  const ToyEncoderParams<T>& params,
                                  const EncoderConfig& cfg,
                                  double input_frame_rate) {
  cfg.validate();
  if (features.rank() != 2 || features.dim(1) != cfg.input_dim)
    throw ShapeError("toy_encode: features " + to_string(features.shape()) +
                     " do not match encoder input dim " +
                     std::to_string(cfg.input_dim));
  if (params.layers.size() != cfg.n_layers)
    throw std::invalid_argument("toy_encode: parameter layer count mismatch");
  Tensor<T> x = params.input(features);
  if (cfg.frame_stride > 1) x = matmul(pooling_matrix<T>(x.dim(0), cfg.frame_stride), x);
  x = add(x, sinusoidal_positions<T>(x.dim(0), cfg.model_dim));

  RepresentationStack<T> stack;
  stack.source = StackSource::kToy;
  stack.frame_rate = input_frame_rate / static_cast<double>(cfg.frame_stride);
  for (const auto& layer : params.layers) {
    x = add(x, self_attention(layer.attn_norm(x), layer, cfg.n_heads));
    x = add(x, layer.ff_out(tanh(layer.ff_in(layer.ff_norm(x)))));
    stack.layers.push_back(x);
  }
  return stack;
}

RepresentationStack<float> toy_encode(const FeatureMatrix& features,
                                      const ToyEncoderParams<float>& params,
                                      const EncoderConfig& cfg) {
  return toy_encode(to_tensor<float>(features), params, cfg, features.frame_rate);
}

template <typename T>
Tensor<T> to_tensor(const FeatureMatrix& m) {
  return Tensor<T>::from({m.frames, m.dim},
                         std::vector<T>(m.values.begin(), m.values.end()));
}

// ---------------------------------------------------------------------------
// RSTK

namespace {

constexpr char kStackMagic[4] = {'R', 'S', 'T', 'K'};
constexpr std::uint32_t kStackVersion = 1;
constexpr std::size_t kStackHeader = 20;

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v;
  std::memcpy(&v, in.data() + offset, 4);
  return v;
}

}  // namespace

void export_stack(const std::filesystem::path& path,
                  const RepresentationStack<float>& stack) {
  stack.validate();
  const std::size_t L = stack.num_layers(), T = stack.num_frames(), D = stack.dim();
  std::string out;
  out.reserve(kStackHeader + L * T * D * 4);
  out.append(kStackMagic, 4);
  put_u32(out, kStackVersion);
  put_u32(out, static_cast<std::uint32_t>(L));
  put_u32(out, static_cast<std::uint32_t>(T));
  put_u32(out, static_cast<std::uint32_t>(D));
  for (const auto& layer : stack.layers)
    out.append(reinterpret_cast<const char*>(layer.data().data()),
               layer.numel() * sizeof(float));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("rstk " + path.string() + ": cannot write");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

RepresentationStack<float> import_stack(const std::filesystem::path& path,
                                        double frame_rate) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("rstk " + path.string() + ": cannot open");
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  auto fail = [&](std::size_t offset, const std::string& why) {
    throw std::runtime_error("rstk " + path.string() + ": at byte " +
                             std::to_string(offset) + ": " + why);
  };
  if (bytes.size() < kStackHeader)
    fail(bytes.size(), "truncated header: expected " +
                           std::to_string(kStackHeader) + " bytes, got " +
                           std::to_string(bytes.size()));
  if (std::memcmp(bytes.data(), kStackMagic, 4) != 0) fail(0, "bad magic");
  if (get_u32(bytes, 4) != kStackVersion)
    fail(4, "unsupported version " + std::to_string(get_u32(bytes, 4)));
  const std::size_t L = get_u32(bytes, 8), T = get_u32(bytes, 12), D = get_u32(bytes, 16);
  if (L == 0 || T == 0 || D == 0) fail(8, "zero dimension in header");
  const std::size_t expected = kStackHeader + L * T * D * sizeof(float);
  if (bytes.size() != expected)
    fail(std::min(bytes.size(), expected),
         (bytes.size() < expected ? "truncated payload" : "trailing bytes") +
             std::string(": expected ") + std::to_string(expected) +
             " bytes, got " + std::to_string(bytes.size()));
  RepresentationStack<float> stack;
  stack.source = StackSource::kImported;
  stack.frame_rate = frame_rate;
  const char* p = bytes.data() + kStackHeader;
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<float> v(T * D);
    std::memcpy(v.data(), p + l * T * D * sizeof(float), T * D * sizeof(float));
    stack.layers.push_back(Tensor<float>::from({T, D}, std::move(v)));
  }
  stack.validate();
  return stack;
}

// ---------------------------------------------------------------------------
// Padding removal and alignment

template <typename T>
RepresentationStack<T> trim_padding(const RepresentationStack<T>& stack,
                                    std::size_t valid_frames) {
  const std::size_t frames = stack.num_frames();
  if (valid_frames < 1 || valid_frames > frames)
    throw std::invalid_argument("trim_padding: valid_frames " +
                                std::to_string(valid_frames) +
                                " outside [1, " + std::to_string(frames) + "]");
  if (valid_frames == frames) return stack;
  RepresentationStack<T> out;
  out.source = stack.source;
  out.frame_rate = stack.frame_rate;
  for (const auto& l : stack.layers) out.layers.push_back(slice(l, 0, 0, valid_frames));
  return out;
}

std::size_t valid_frame_count(double duration_seconds, double frame_rate) {
  const double frames = std::ceil(duration_seconds * frame_rate - 1e-9);
  return static_cast<std::size_t>(std::max(1.0, frames));
}

std::vector<double> interpolation_weights(std::size_t source, std::size_t target) {
  std::vector<double> w(target * source, 0.0);
  for (std::size_t j = 0; j < target; ++j) {
    const double pos = target == 1 ? 0.0
                                   : static_cast<double>(j) * static_cast<double>(source - 1) /
                                         static_cast<double>(target - 1);
    auto i0 = static_cast<std::size_t>(std::floor(pos));
    if (i0 >= source - 1) {
      w[j * source + source - 1] = 1.0;
      continue;
    }
    const double frac = pos - static_cast<double>(i0);
    w[j * source + i0] = 1.0 - frac;
    w[j * source + i0 + 1] += frac;
  }
  return w;
}

template <typename T>
std::vector<Tensor<T>> align_frames(const std::vector<Tensor<T>>& streams) {
  if (streams.empty()) return {};
  std::size_t target = streams[0].dim(0);
  for (const auto& s : streams) target = std::min(target, s.dim(0));
  std::vector<Tensor<T>> out;
  for (const auto& s : streams) {
    const std::size_t source = s.dim(0);
    if (source == target) {
      out.push_back(s);
      continue;
    }
    auto w = interpolation_weights(source, target);
    out.push_back(matmul(
        Tensor<T>::from({target, source}, std::vector<T>(w.begin(), w.end())), s));
  }
  return out;
}

std::vector<FeatureMatrix> align_frames(const std::vector<FeatureMatrix>& streams) {
  std::vector<Tensor<double>> tensors;
  for (const auto& s : streams) tensors.push_back(to_tensor<double>(s));
  auto aligned = align_frames(tensors);
  std::vector<FeatureMatrix> out;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    if (aligned[i].dim(0) == streams[i].frames) {
      out.push_back(streams[i]);
      continue;
    }
    const double rate = streams[i].frame_rate * static_cast<double>(aligned[i].dim(0)) /
                        static_cast<double>(streams[i].frames);
    FeatureMatrix m(aligned[i].dim(0), streams[i].dim, rate);
    auto d = aligned[i].data();
    for (std::size_t k = 0; k < d.size(); ++k) m.values[k] = static_cast<float>(d[k]);
    out.push_back(std::move(m));
  }
  return out;
}

template struct RepresentationStack<float>;
template struct RepresentationStack<double>;
template RepresentationStack<float> toy_encode(const Tensor<float>&,
                                               const ToyEncoderParams<float>&,
                                               const EncoderConfig&, double);
template RepresentationStack<double> toy_encode(const Tensor<double>&,
                                                const ToyEncoderParams<double>&,
                                                const EncoderConfig&, double);
template RepresentationStack<float> trim_padding(const RepresentationStack<float>&,
                                                 std::size_t);
template RepresentationStack<double> trim_padding(const RepresentationStack<double>&,
                                                  std::size_t);
template std::vector<Tensor<float>> align_frames(const std::vector<Tensor<float>>&);
template std::vector<Tensor<double>> align_frames(const std::vector<Tensor<double>>&);
template Tensor<float> to_tensor(const FeatureMatrix&);
template Tensor<double> to_tensor(const FeatureMatrix&);

}  // namespace voxgrade
