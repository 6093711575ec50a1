// voxgrade/tensor.h

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

#ifndef VOXGRADE_TENSOR_H_
#define VOXGRADE_TENSOR_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace voxgrade {

// Dimensions of a dense row-major tensor. Rank 0 is a scalar; rank is at
// most 3 everywhere in this library.
using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class OpKind {
  kLeaf,
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kAbsDiff,
  kConcat,
  kSlice,
  kTranspose,
  kTanh,
  kSigmoid,
  kLeakyRelu,
  kLayerNorm,
  kSoftmax,
  kLog,
  kMean,
  kMeanAll,
};

const char* op_name(OpKind kind);

template <typename T>
class Graph;

/// A dense tensor that doubles as a node of a reverse-mode autodiff graph.
///
/// Copies are shallow: two Tensor values may refer to the same node, which is
/// how parameters are shared between the optimizer, checkpoints and the
/// forward pass. Use clone() for an independent deep copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  struct Node {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty until first accumulation
    bool requires_grad = false;
    OpKind kind = OpKind::kLeaf;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward;
  };

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor filled(const Shape& shape, T value, bool requires_grad = false);
  static Tensor from(const Shape& shape, std::vector<T> data,
                     bool requires_grad = false);
  static Tensor scalar(T value);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node_->data.size(); }
  OpKind kind() const { return node_->kind; }

  std::span<const T> data() const { return node_->data; }
  std::span<T> mutable_data() { return node_->data; }
  T item() const;
  T at(std::size_t i) const;
  T at(std::size_t i, std::size_t j) const;
  T at(std::size_t i, std::size_t j, std::size_t k) const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool value) { node_->requires_grad = value; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad();
  void zero_grad() { node_->grad.clear(); }

  // Fresh leaf with the same values; never requires grad.
  Tensor detach() const;
  // Fresh leaf with the same values and requires_grad flag.
  Tensor clone() const;
  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(node_->data.begin(), node_->data.end());
    return Tensor<U>::from(node_->shape, std::move(out), node_->requires_grad);
  }

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared_node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Tape of recorded operations in creation order (which is a topological
/// order). Operations record into the graph that is active on the calling
/// thread; with no active graph nothing is recorded and results are plain
/// constants.
template <typename T>
class Graph {
 public:
  class Scope {
   public:
    explicit Scope(Graph* graph);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Graph* previous_;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  [[nodiscard]] Scope activate() { return Scope(this); }
  static Graph* active() { return active_; }

  void record(std::shared_ptr<typename Tensor<T>::Node> node);
  bool contains(const Tensor<T>& tensor) const;
  std::size_t size() const { return nodes_.size(); }

  // Fills d(loss)/d(x) for every requires_grad tensor reachable from `loss`.
  // Leaf gradients accumulate across calls; call zero_grad() between steps.
  void backward(const Tensor<T>& loss);

 private:
  std::vector<std::shared_ptr<typename Tensor<T>::Node>> nodes_;
  std::unordered_set<const typename Tensor<T>::Node*> members_;
  static thread_local Graph* active_;
};

template <typename T>
void backward(Graph<T>& graph, const Tensor<T>& loss) {
  graph.backward(loss);
}

// Records the branch taken at a non-smooth point (leaky_relu sign, abs sign,
// argmax) while a BranchMonitor is active on this thread. Gradient checking
// uses the recorded signatures to detect finite-difference probes that
// straddle a kink.
class BranchMonitor {
 public:
  BranchMonitor();
  ~BranchMonitor();
  BranchMonitor(const BranchMonitor&) = delete;
  BranchMonitor& operator=(const BranchMonitor&) = delete;

  const std::vector<int>& signature() const { return signature_; }
  static void note(int branch);

 private:
  std::vector<int> signature_;
  BranchMonitor* previous_;
  static thread_local BranchMonitor* active_;
};

// ---------------------------------------------------------------------------
// Primitives. Broadcasting for add/sub/mul/abs_diff follows right-aligned
// numpy rules: trailing dimensions must be equal or one of them 1.
// ---------------------------------------------------------------------------

/// [M,K] x [K,N] -> [M,N].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
/// |a - b| elementwise. The derivative at a == b is taken as 0.
template <typename T>
Tensor<T> abs_diff(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);

/// Concatenation along `axis`; all other dimensions must agree.
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);
/// Half-open range [begin, end) along `axis`.
template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin,
                std::size_t end);
/// Rank-2 transpose.
template <typename T>
Tensor<T> transpose(const Tensor<T>& x);

template <typename T>
Tensor<T> tanh(const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
/// Derivative at exactly 0 is the positive-side slope 1.
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope);
/// Normalizes to zero mean, unit (biased) variance along `axis`. No affine.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, std::size_t axis, T epsilon = T(1e-5));
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);
template <typename T>
Tensor<T> log(const Tensor<T>& x);
/// Mean along `axis`; the axis is removed from the shape.
template <typename T>
Tensor<T> mean(const Tensor<T>& x, std::size_t axis);
/// Mean of every element, as a rank-0 tensor.
template <typename T>
Tensor<T> mean_all(const Tensor<T>& x);

}  // namespace voxgrade

#endif  // VOXGRADE_TENSOR_H_
