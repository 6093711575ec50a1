// voxgrade/src/tensor.cc

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

#include "voxgrade/tensor.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

namespace voxgrade {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kAbsDiff: return "abs_diff";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kLeakyRelu: return "leaky_relu";
    case OpKind::kLayerNorm: return "layer_norm";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLog: return "log";
    case OpKind::kMean: return "mean";
    case OpKind::kMeanAll: return "mean_all";
  }
  return "unknown";
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.size() > 3)
    throw ShapeError("tensor rank " + std::to_string(shape.size()) +
                     " exceeds 3: " + to_string(shape));
  for (std::size_t d : shape)
    if (d == 0) throw ShapeError("zero dimension in shape " + to_string(shape));
}

[[noreturn]] void mismatch(OpKind kind, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op_name(kind)) + ": shape mismatch " +
                   to_string(a) + " vs " + to_string(b));
}

template <typename T>
using NodePtr = std::shared_ptr<typename Tensor<T>::Node>;

template <typename T>
std::vector<T>& grad_buffer(typename Tensor<T>::Node& node) {
  if (node.grad.empty()) node.grad.assign(node.data.size(), T(0));
  return node.grad;
}

// Builds the result node. It joins the active graph only when some input
// requires grad; otherwise it is a constant.
template <typename T>
Tensor<T> make_result(OpKind kind, Shape shape, std::vector<T> data,
                      std::vector<Tensor<T>> inputs,
                      std::function<void(typename Tensor<T>::Node&)> fn) {
  auto node = std::make_shared<typename Tensor<T>::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->kind = kind;
  Graph<T>* graph = Graph<T>::active();
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in.requires_grad();
  if (graph != nullptr && needs) {
    node->requires_grad = true;
    for (const auto& in : inputs) node->inputs.push_back(in.shared_node());
    node->backward = std::move(fn);
    graph->record(node);
  }
  return Tensor<T>(node);
}

struct AxisSplit {
  std::size_t outer, n, inner;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  AxisSplit s{1, shape[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

void check_axis(OpKind kind, const Shape& shape, std::size_t axis) {
  if (axis >= shape.size())
    throw ShapeError(std::string(op_name(kind)) + ": axis " +
                     std::to_string(axis) + " out of range for shape " +
                     to_string(shape));
}

// Right-aligned broadcast of two shapes, both padded to rank 3.
struct Broadcast {
  Shape out;
  std::array<std::size_t, 3> dims{1, 1, 1};
  std::array<std::size_t, 3> a_strides{0, 0, 0};
  std::array<std::size_t, 3> b_strides{0, 0, 0};
};

std::array<std::size_t, 3> padded(const Shape& s) {
  std::array<std::size_t, 3> p{1, 1, 1};
  for (std::size_t i = 0; i < s.size(); ++i) p[3 - s.size() + i] = s[i];
  return p;
}

std::array<std::size_t, 3> strides_for(const std::array<std::size_t, 3>& p,
                                       const std::array<std::size_t, 3>& out) {
  std::array<std::size_t, 3> st{};
  std::size_t acc = 1;
  for (int i = 2; i >= 0; --i) {
    st[i] = (p[i] == 1 && out[i] != 1) ? 0 : acc;
    acc *= p[i];
  }
  return st;
}

Broadcast broadcast(OpKind kind, const Shape& a, const Shape& b) {
  Broadcast bc;
  auto pa = padded(a);
  auto pb = padded(b);
  for (int i = 0; i < 3; ++i) {
    if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) mismatch(kind, a, b);
    bc.dims[i] = std::max(pa[i], pb[i]);
  }
  std::size_t rank = std::max(a.size(), b.size());
  for (std::size_t i = 3 - rank; i < 3; ++i) bc.out.push_back(bc.dims[i]);
  bc.a_strides = strides_for(pa, bc.dims);
  bc.b_strides = strides_for(pb, bc.dims);
  return bc;
}

// Visits every output element with its flat input offsets.
template <typename F>
void for_each_broadcast(const Broadcast& bc, F&& f) {
  std::size_t o = 0;
  for (std::size_t i = 0; i < bc.dims[0]; ++i)
    for (std::size_t j = 0; j < bc.dims[1]; ++j)
      for (std::size_t k = 0; k < bc.dims[2]; ++k, ++o)
        f(o,
          i * bc.a_strides[0] + j * bc.a_strides[1] + k * bc.a_strides[2],
          i * bc.b_strides[0] + j * bc.b_strides[1] + k * bc.b_strides[2]);
}

// Shared driver for the broadcasting binary ops. `value(x, y)` computes the
// output; `partials(x, y)` returns {d/dx, d/dy}.
template <typename T, typename Value, typename Partials>
Tensor<T> binary(OpKind kind, const Tensor<T>& a, const Tensor<T>& b,
                 Value value, Partials partials) {
  Broadcast bc = broadcast(kind, a.shape(), b.shape());
  std::vector<T> out(numel(bc.out));
  auto ad = a.data();
  auto bd = b.data();
  for_each_broadcast(bc, [&](std::size_t o, std::size_t ia, std::size_t ib) {
    out[o] = value(ad[ia], bd[ib]);
  });
  return make_result<T>(
      kind, bc.out, std::move(out), {a, b},
      [bc, partials](typename Tensor<T>::Node& self) {
        auto& na = *self.inputs[0];
        auto& nb = *self.inputs[1];
        T* ga = na.requires_grad ? grad_buffer<T>(na).data() : nullptr;
        T* gb = nb.requires_grad ? grad_buffer<T>(nb).data() : nullptr;
        for_each_broadcast(bc, [&](std::size_t o, std::size_t ia,
                                   std::size_t ib) {
          auto [da, db] = partials(na.data[ia], nb.data[ib]);
          if (ga) ga[ia] += self.grad[o] * da;
          if (gb) gb[ib] += self.grad[o] * db;
        });
      });
}

// Elementwise unary op with derivative expressed via input x and output y.
template <typename T, typename Value, typename Deriv>
Tensor<T> unary(OpKind kind, const Tensor<T>& x, Value value, Deriv deriv) {
  auto xd = x.data();
  std::vector<T> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) out[i] = value(xd[i]);
  return make_result<T>(kind, x.shape(), std::move(out), {x},
                        [deriv](typename Tensor<T>::Node& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          auto& g = grad_buffer<T>(in);
                          for (std::size_t i = 0; i < g.size(); ++i)
                            g[i] += self.grad[i] * deriv(in.data[i], self.data[i]);
                        });
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

template <typename T>
Tensor<T> Tensor<T>::zeros(const Shape& shape, bool requires_grad) {
  return filled(shape, T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::filled(const Shape& shape, T value, bool requires_grad) {
  check_shape(shape);
  return from(shape, std::vector<T>(voxgrade::numel(shape), value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from(const Shape& shape, std::vector<T> data,
                          bool requires_grad) {
  check_shape(shape);
  if (voxgrade::numel(shape) != data.size())
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + to_string(shape));
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(node);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value) {
  return from({}, {value});
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  if (axis >= rank())
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     to_string(shape()));
  return node_->shape[axis];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1)
    throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return node_->data[0];
}

template <typename T>
T Tensor<T>::at(std::size_t i) const {
  return node_->data.at(i);
}

template <typename T>
T Tensor<T>::at(std::size_t i, std::size_t j) const {
  return node_->data.at(i * node_->shape.at(1) + j);
}

template <typename T>
T Tensor<T>::at(std::size_t i, std::size_t j, std::size_t k) const {
  const auto& s = node_->shape;
  return node_->data.at((i * s.at(1) + j) * s.at(2) + k);
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
  return grad_buffer<T>(*node_);
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from(node_->shape, node_->data, false);
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return from(node_->shape, node_->data, node_->requires_grad);
}

// ---------------------------------------------------------------------------
// Graph

template <typename T>
thread_local Graph<T>* Graph<T>::active_ = nullptr;

template <typename T>
Graph<T>::Scope::Scope(Graph* graph) : previous_(Graph::active_) {
  Graph::active_ = graph;
}

template <typename T>
Graph<T>::Scope::~Scope() {
  Graph::active_ = previous_;
}

template <typename T>
void Graph<T>::record(std::shared_ptr<typename Tensor<T>::Node> node) {
  members_.insert(node.get());
  nodes_.push_back(std::move(node));
}

template <typename T>
bool Graph<T>::contains(const Tensor<T>& tensor) const {
  return members_.count(tensor.node()) > 0;
}

template <typename T>
void Graph<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ShapeError("backward: loss must be scalar, got shape " +
                     (loss.defined() ? to_string(loss.shape()) : "<empty>"));
  if (!contains(loss))
    throw std::invalid_argument(
        "backward: loss was not recorded in this graph (no input requires "
        "grad, or no graph was active)");
  // Intermediate gradients are rebuilt from scratch on every call.
  for (auto& node : nodes_) node->grad.clear();
  loss.node()->grad.assign(1, T(1));
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    auto& node = **it;
    if (node.grad.empty() || !node.backward) continue;
    node.backward(node);
  }
}

// ---------------------------------------------------------------------------
// BranchMonitor

thread_local BranchMonitor* BranchMonitor::active_ = nullptr;

BranchMonitor::BranchMonitor() : previous_(active_) { active_ = this; }

BranchMonitor::~BranchMonitor() { active_ = previous_; }

void BranchMonitor::note(int branch) {
  if (active_ != nullptr) active_->signature_.push_back(branch);
}

// ---------------------------------------------------------------------------
// Primitives

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    mismatch(OpKind::kMatmul, a.shape(), b.shape());
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> out(m * n, T(0));
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    T* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ad[i * k + p];
      const T* brow = bd.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return make_result<T>(
      OpKind::kMatmul, {m, n}, std::move(out), {a, b},
      [m, k, n](typename Tensor<T>::Node& self) {
        auto& na = *self.inputs[0];
        auto& nb = *self.inputs[1];
        const T* g = self.grad.data();
        if (na.requires_grad) {
          // dA = dC * B^T
          T* ga = grad_buffer<T>(na).data();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              const T* brow = nb.data.data() + p * n;
              const T* grow = g + i * n;
              T acc = T(0);
              for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
              ga[i * k + p] += acc;
            }
        }
        if (nb.requires_grad) {
          // dB = A^T * dC
          T* gb = grad_buffer<T>(nb).data();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              const T av = na.data[i * k + p];
              const T* grow = g + i * n;
              T* gbrow = gb + p * n;
              for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
            }
        }
      });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(
      OpKind::kAdd, a, b, [](T x, T y) { return x + y; },
      [](T, T) { return std::pair<T, T>{T(1), T(1)}; });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(
      OpKind::kSub, a, b, [](T x, T y) { return x - y; },
      [](T, T) { return std::pair<T, T>{T(1), T(-1)}; });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(
      OpKind::kMul, a, b, [](T x, T y) { return x * y; },
      [](T x, T y) { return std::pair<T, T>{y, x}; });
}

template <typename T>
Tensor<T> abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(
      OpKind::kAbsDiff, a, b,
      [](T x, T y) {
        BranchMonitor::note(x > y ? 1 : (x < y ? -1 : 0));
        return std::abs(x - y);
      },
      [](T x, T y) {
        T s = x > y ? T(1) : (x < y ? T(-1) : T(0));
        return std::pair<T, T>{s, -s};
      });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  return mul(x, Tensor<T>::scalar(factor));
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  check_axis(OpKind::kConcat, first, axis);
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size()) mismatch(OpKind::kConcat, first, s);
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != axis && s[i] != first[i]) mismatch(OpKind::kConcat, first, s);
    out_shape[axis] += s[axis];
    widths.push_back(s[axis]);
  }
  AxisSplit sp = split_axis(out_shape, axis);
  std::vector<T> out(numel(out_shape));
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    auto src = parts[p].data();
    const std::size_t w = widths[p];
    for (std::size_t o = 0; o < sp.outer; ++o)
      std::copy_n(src.data() + o * w * sp.inner, w * sp.inner,
                  out.data() + (o * sp.n + offset) * sp.inner);
    offset += w;
  }
  return make_result<T>(
      OpKind::kConcat, out_shape, std::move(out), parts,
      [sp, widths](typename Tensor<T>::Node& self) {
        std::size_t offset = 0;
        for (std::size_t p = 0; p < widths.size(); ++p) {
          auto& in = *self.inputs[p];
          const std::size_t w = widths[p];
          if (in.requires_grad) {
            auto& g = grad_buffer<T>(in);
            for (std::size_t o = 0; o < sp.outer; ++o) {
              const T* src = self.grad.data() + (o * sp.n + offset) * sp.inner;
              T* dst = g.data() + o * w * sp.inner;
              for (std::size_t i = 0; i < w * sp.inner; ++i) dst[i] += src[i];
            }
          }
          offset += w;
        }
      });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin,
                std::size_t end) {
  check_axis(OpKind::kSlice, x.shape(), axis);
  if (begin >= end || end > x.dim(axis))
    throw ShapeError("slice: range [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") invalid for shape " +
                     to_string(x.shape()) + " axis " + std::to_string(axis));
  AxisSplit sp = split_axis(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const std::size_t w = end - begin;
  std::vector<T> out(numel(out_shape));
  auto src = x.data();
  for (std::size_t o = 0; o < sp.outer; ++o)
    std::copy_n(src.data() + (o * sp.n + begin) * sp.inner, w * sp.inner,
                out.data() + o * w * sp.inner);
  return make_result<T>(
      OpKind::kSlice, out_shape, std::move(out), {x},
      [sp, begin, w](typename Tensor<T>::Node& self) {
        auto& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto& g = grad_buffer<T>(in);
        for (std::size_t o = 0; o < sp.outer; ++o) {
          const T* s = self.grad.data() + o * w * sp.inner;
          T* d = g.data() + (o * sp.n + begin) * sp.inner;
          for (std::size_t i = 0; i < w * sp.inner; ++i) d[i] += s[i];
        }
      });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  if (x.rank() != 2)
    throw ShapeError("transpose: expected rank 2, got " + to_string(x.shape()));
  const std::size_t r = x.dim(0), c = x.dim(1);
  std::vector<T> out(r * c);
  auto d = x.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = d[i * c + j];
  return make_result<T>(OpKind::kTranspose, {c, r}, std::move(out), {x},
                        [r, c](typename Tensor<T>::Node& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          auto& g = grad_buffer<T>(in);
                          for (std::size_t i = 0; i < r; ++i)
                            for (std::size_t j = 0; j < c; ++j)
                              g[i * c + j] += self.grad[j * r + i];
                        });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return unary(
      OpKind::kTanh, x, [](T v) { return std::tanh(v); },
      [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary(
      OpKind::kSigmoid, x,
      [](T v) {
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  return unary(
      OpKind::kLeakyRelu, x,
      [slope](T v) {
        BranchMonitor::note(v >= T(0) ? 1 : 0);
        return v >= T(0) ? v : slope * v;
      },
      [slope](T v, T) { return v >= T(0) ? T(1) : slope; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& x) {
  return unary(
      OpKind::kLog, x, [](T v) { return std::log(v); },
      [](T v, T) { return T(1) / v; });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, std::size_t axis, T epsilon) {
  check_axis(OpKind::kLayerNorm, x.shape(), axis);
  AxisSplit sp = split_axis(x.shape(), axis);
  auto d = x.data();
  std::vector<T> out(d.size());
  // Per-row inverse standard deviation, kept for the backward pass.
  std::vector<T> inv_std(sp.outer * sp.inner);
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = 0; i < sp.inner; ++i) {
      T mu = T(0);
      for (std::size_t k = 0; k < sp.n; ++k) mu += d[(o * sp.n + k) * sp.inner + i];
      mu /= T(sp.n);
      T var = T(0);
      for (std::size_t k = 0; k < sp.n; ++k) {
        T c = d[(o * sp.n + k) * sp.inner + i] - mu;
        var += c * c;
      }
      var /= T(sp.n);
      T is = T(1) / std::sqrt(var + epsilon);
      inv_std[o * sp.inner + i] = is;
      for (std::size_t k = 0; k < sp.n; ++k) {
        std::size_t idx = (o * sp.n + k) * sp.inner + i;
        out[idx] = (d[idx] - mu) * is;
      }
    }
  return make_result<T>(
      OpKind::kLayerNorm, x.shape(), std::move(out), {x},
      [sp, inv_std](typename Tensor<T>::Node& self) {
        auto& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto& g = grad_buffer<T>(in);
        // dx = inv_std * (dy - mean(dy) - y * mean(dy * y))
        for (std::size_t o = 0; o < sp.outer; ++o)
          for (std::size_t i = 0; i < sp.inner; ++i) {
            T mean_g = T(0), mean_gy = T(0);
            for (std::size_t k = 0; k < sp.n; ++k) {
              std::size_t idx = (o * sp.n + k) * sp.inner + i;
              mean_g += self.grad[idx];
              mean_gy += self.grad[idx] * self.data[idx];
            }
            mean_g /= T(sp.n);
            mean_gy /= T(sp.n);
            const T is = inv_std[o * sp.inner + i];
            for (std::size_t k = 0; k < sp.n; ++k) {
              std::size_t idx = (o * sp.n + k) * sp.inner + i;
              g[idx] += is * (self.grad[idx] - mean_g - self.data[idx] * mean_gy);
            }
          }
      });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  check_axis(OpKind::kSoftmax, x.shape(), axis);
  AxisSplit sp = split_axis(x.shape(), axis);
  auto d = x.data();
  std::vector<T> out(d.size());
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = 0; i < sp.inner; ++i) {
      T mx = d[o * sp.n * sp.inner + i];
      for (std::size_t k = 1; k < sp.n; ++k)
        mx = std::max(mx, d[(o * sp.n + k) * sp.inner + i]);
      T total = T(0);
      for (std::size_t k = 0; k < sp.n; ++k) {
        std::size_t idx = (o * sp.n + k) * sp.inner + i;
        out[idx] = std::exp(d[idx] - mx);
        total += out[idx];
      }
      for (std::size_t k = 0; k < sp.n; ++k)
        out[(o * sp.n + k) * sp.inner + i] /= total;
    }
  return make_result<T>(
      OpKind::kSoftmax, x.shape(), std::move(out), {x},
      [sp](typename Tensor<T>::Node& self) {
        auto& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto& g = grad_buffer<T>(in);
        for (std::size_t o = 0; o < sp.outer; ++o)
          for (std::size_t i = 0; i < sp.inner; ++i) {
            T dot = T(0);
            for (std::size_t k = 0; k < sp.n; ++k) {
              std::size_t idx = (o * sp.n + k) * sp.inner + i;
              dot += self.grad[idx] * self.data[idx];
            }
            for (std::size_t k = 0; k < sp.n; ++k) {
              std::size_t idx = (o * sp.n + k) * sp.inner + i;
              g[idx] += self.data[idx] * (self.grad[idx] - dot);
            }
          }
      });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x, std::size_t axis) {
  check_axis(OpKind::kMean, x.shape(), axis);
  AxisSplit sp = split_axis(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  auto d = x.data();
  std::vector<T> out(sp.outer * sp.inner, T(0));
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t k = 0; k < sp.n; ++k)
      for (std::size_t i = 0; i < sp.inner; ++i)
        out[o * sp.inner + i] += d[(o * sp.n + k) * sp.inner + i];
  for (auto& v : out) v /= T(sp.n);
  return make_result<T>(OpKind::kMean, out_shape, std::move(out), {x},
                        [sp](typename Tensor<T>::Node& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          auto& g = grad_buffer<T>(in);
                          const T w = T(1) / T(sp.n);
                          for (std::size_t o = 0; o < sp.outer; ++o)
                            for (std::size_t k = 0; k < sp.n; ++k)
                              for (std::size_t i = 0; i < sp.inner; ++i)
                                g[(o * sp.n + k) * sp.inner + i] +=
                                    self.grad[o * sp.inner + i] * w;
                        });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
  auto d = x.data();
  T total = T(0);
  for (T v : d) total += v;
  const std::size_t n = d.size();
  return make_result<T>(OpKind::kMeanAll, {}, {total / T(n)}, {x},
                        [n](typename Tensor<T>::Node& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          auto& g = grad_buffer<T>(in);
                          const T w = self.grad[0] / T(n);
                          for (auto& v : g) v += w;
                        });
}

#define VOXGRADE_INSTANTIATE(T)                                               \
  template class Tensor<T>;                                                   \
  template class Graph<T>;                                                    \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> abs_diff(const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> scale(const Tensor<T>&, T);                              \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);      \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t,        \
                           std::size_t);                                      \
  template Tensor<T> transpose(const Tensor<T>&);                             \
  template Tensor<T> tanh(const Tensor<T>&);                                  \
  template Tensor<T> sigmoid(const Tensor<T>&);                               \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                         \
  template Tensor<T> layer_norm(const Tensor<T>&, std::size_t, T);            \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                  \
  template Tensor<T> log(const Tensor<T>&);                                   \
  template Tensor<T> mean(const Tensor<T>&, std::size_t);                     \
  template Tensor<T> mean_all(const Tensor<T>&);

VOXGRADE_INSTANTIATE(float)
VOXGRADE_INSTANTIATE(double)

#undef VOXGRADE_INSTANTIATE

}  // namespace voxgrade
