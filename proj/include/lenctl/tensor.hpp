// Copyright 2026 The lenctl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lenctl {

/// Dense row-major matrix. Every tensor in the toolkit is rank 2; scalars
/// are 1x1 and vectors are 1xn.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::string shape_string() const;

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool requires_grad() const noexcept { return requires_grad_; }
  void set_requires_grad(bool on);
  /// Gradient buffer, same shape as the data. Allocated on first use.
  std::vector<double>& grad();
  const std::vector<double>& grad() const { return grad_; }
  bool has_grad() const noexcept { return !grad_.empty(); }
  void zero_grad();

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  std::vector<double> grad_;
  bool requires_grad_ = false;
};

class Graph;

/// Handle to a node recorded on a Graph.
struct Var {
  std::size_t index = static_cast<std::size_t>(-1);
  bool valid() const noexcept { return index != static_cast<std::size_t>(-1); }
};

/// Reverse-mode tape. Nodes are appended in execution order, so a reverse
/// sweep over the indices reachable from the loss is a valid topological
/// order. A graph is built per step and discarded afterwards.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf that owns its value.
  Var input(Tensor value, bool requires_grad = false);
  /// Leaf aliasing external storage; backward accumulates into
  /// `tensor.grad()` when `tensor.requires_grad()`.
  Var parameter(Tensor& tensor);
  /// Read-only leaf aliasing external storage; never receives gradients.
  Var alias(const Tensor& tensor);

  const Tensor& value(Var v) const;
  /// Gradient of the node, allocated (zeroed) on demand.
  std::vector<double>& grad(Var v);
  bool needs_grad(Var v) const { return nodes_[v.index].needs_grad; }

  /// Records an op result. `backward` reads grad(out) and accumulates into
  /// the parents' gradients.
  Var record(Tensor value, std::vector<Var> parents,
             std::function<void(Graph&, Var)> backward);

  /// Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. Throws
  /// ShapeError if `loss` is not 1x1.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    std::unique_ptr<Tensor> owned;
    Tensor* tensor = nullptr;
    std::vector<double> local_grad;
    std::vector<Var> parents;
    std::function<void(Graph&, Var)> backward;
    bool needs_grad = false;
    bool external = false;
    bool read_only = false;
  };
  std::vector<Node> nodes_;
};

namespace ops {

// All ops validate shapes and throw ShapeError with both shapes reported.

Var matmul(Graph& g, Var a, Var b);     ///< a[m x k] * b[k x n]
Var matmul_bt(Graph& g, Var a, Var b);  ///< a[m x k] * b[n x k]^T
Var add(Graph& g, Var a, Var b);
Var add_row(Graph& g, Var x, Var bias);  ///< x[m x n] + bias[1 x n] per row
Var mul(Graph& g, Var a, Var b);         ///< elementwise
Var scale(Graph& g, Var x, double s);
Var sum(Graph& g, Var x);                ///< 1x1
Var relu(Graph& g, Var x);
Var gelu(Graph& g, Var x);               ///< tanh approximation

/// Numerically stable row softmax. `mask`, if given, is an additive mask of
/// the same shape holding 0 or -infinity. A row with every entry masked
/// throws std::domain_error.
Var softmax_rows(Graph& g, Var x, const Tensor* mask = nullptr);

Var layer_norm(Graph& g, Var x, Var gamma, Var beta, double eps);

/// Gathers rows of `table` ([V x d]) for each id.
Var embedding(Graph& g, Var table, std::span<const std::int32_t> ids);

/// Mean over rows of -log softmax(logits)[t, target_t]. Returns 1x1.
Var cross_entropy(Graph& g, Var logits, std::span<const std::int32_t> targets);

Var slice_cols(Graph& g, Var x, std::size_t start, std::size_t count);
Var concat_cols(Graph& g, std::span<const Var> parts);

/// Per-row top-k reweighting of a probability matrix: for row t the
/// min(remaining[t], n) largest entries (ties to the lowest index) are
/// multiplied by (1 + boost) and the row is renormalized.
Var laam_boost(Graph& g, Var probs, std::span<const std::int64_t> remaining,
               double boost);

}  // namespace ops

/// Non-differentiable helpers shared by the inference path.
namespace kernels {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

inline double gelu(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  return 0.5 * x * (1.0 + (1.0 - 2.0 / (std::exp(2.0 * u) + 1.0)));
}

void softmax_inplace(std::span<double> row);
/// Row-level top-k boost, same semantics as ops::laam_boost.
void laam_boost_inplace(std::span<double> row, std::int64_t remaining,
                        double boost);
/// Indices of the k largest entries, ties broken by the lowest index.
std::vector<std::size_t> top_k_indices(std::span<const double> row,
                                       std::size_t k);
void layer_norm_row(std::span<const double> x, std::span<const double> gamma,
                    std::span<const double> beta, double eps,
                    std::span<double> out);
/// out[m x n] = a[m x k] * b[k x n]
void gemm(const Tensor& a, const Tensor& b, Tensor& out);

}  // namespace kernels

}  // namespace lenctl
