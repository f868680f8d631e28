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

#include "lenctl/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lenctl/errors.hpp"

namespace lenctl {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

CMapMat view(const Tensor& t) {
  return CMapMat(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                 static_cast<Eigen::Index>(t.cols()));
}
MapMat view(std::vector<double>& buf, const Tensor& shape_of) {
  return MapMat(buf.data(), static_cast<Eigen::Index>(shape_of.rows()),
                static_cast<Eigen::Index>(shape_of.cols()));
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a,
                                 const Tensor& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() +
                   " vs " + b.shape_string());
}

}  // namespace

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string());
  }
}

std::string Tensor::shape_string() const {
  return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

void Tensor::set_requires_grad(bool on) {
  requires_grad_ = on;
  if (!on) grad_.clear();
}

std::vector<double>& Tensor::grad() {
  if (grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0);
  return grad_;
}

void Tensor::zero_grad() {
  if (!grad_.empty()) std::fill(grad_.begin(), grad_.end(), 0.0);
}

// ---------------------------------------------------------------- Graph

Var Graph::input(Tensor value, bool requires_grad) {
  Node n;
  n.owned = std::make_unique<Tensor>(std::move(value));
  n.tensor = n.owned.get();
  n.needs_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::parameter(Tensor& tensor) {
  Node n;
  n.tensor = &tensor;
  n.external = true;
  n.needs_grad = tensor.requires_grad();
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::alias(const Tensor& tensor) {
  Node n;
  // Only ever read: read_only nodes take their gradient from local_grad.
  n.tensor = const_cast<Tensor*>(&tensor);
  n.read_only = true;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tensor& Graph::value(Var v) const { return *nodes_.at(v.index).tensor; }

std::vector<double>& Graph::grad(Var v) {
  Node& n = nodes_.at(v.index);
  if (n.external) return n.tensor->grad();
  if (n.local_grad.size() != n.tensor->size()) {
    n.local_grad.assign(n.tensor->size(), 0.0);
  }
  return n.local_grad;
}

Var Graph::record(Tensor value, std::vector<Var> parents,
                  std::function<void(Graph&, Var)> backward) {
  Node n;
  n.owned = std::make_unique<Tensor>(std::move(value));
  n.tensor = n.owned.get();
  for (Var p : parents) n.needs_grad = n.needs_grad || nodes_[p.index].needs_grad;
  n.parents = std::move(parents);
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

void Graph::backward(Var loss) {
  const Tensor& l = value(loss);
  if (l.rows() != 1 || l.cols() != 1) {
    throw ShapeError("backward requires a scalar loss, got " +
                     l.shape_string());
  }
  if (!nodes_[loss.index].needs_grad) return;
  std::vector<char> reachable(nodes_.size(), 0);
  reachable[loss.index] = 1;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    if (!reachable[i]) continue;
    for (Var p : nodes_[i].parents) reachable[p.index] = 1;
  }
  grad(loss)[0] += 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (reachable[i] && n.needs_grad && n.backward) n.backward(*this, Var{i});
  }
}

// ---------------------------------------------------------------- kernels

namespace kernels {

void softmax_inplace(std::span<double> row) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : row) mx = std::max(mx, v);
  double z = 0.0;
  for (double& v : row) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : row) v /= z;
}

std::vector<std::size_t> top_k_indices(std::span<const double> row,
                                       std::size_t k) {
  std::vector<std::size_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, row.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                    idx.end(), [&](std::size_t a, std::size_t b) {
                      return row[a] > row[b] || (row[a] == row[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

void laam_boost_inplace(std::span<double> row, std::int64_t remaining,
                        double boost) {
  const std::size_t k =
      static_cast<std::size_t>(std::max<std::int64_t>(remaining, 0));
  if (k == 0 || boost == 0.0) return;
  for (std::size_t i : top_k_indices(row, k)) row[i] *= 1.0 + boost;
  double z = 0.0;
  for (double v : row) z += v;
  for (double& v : row) v /= z;
}

void layer_norm_row(std::span<const double> x, std::span<const double> gamma,
                    std::span<const double> beta, double eps,
                    std::span<double> out) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + eps);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = gamma[i] * (x[i] - mean) * inv + beta[i];
  }
}

void gemm(const Tensor& a, const Tensor& b, Tensor& out) {
  if (a.cols() != b.rows()) shape_mismatch("gemm", a, b);
  if (out.rows() != a.rows() || out.cols() != b.cols()) {
    out = Tensor(a.rows(), b.cols());
  }
  view(out.data(), out).noalias() = view(a) * view(b);
}

}  // namespace kernels

// ---------------------------------------------------------------- ops

namespace ops {

Var matmul(Graph& g, Var a, Var b) {
  const Tensor& ta = g.value(a);
  const Tensor& tb = g.value(b);
  if (ta.cols() != tb.rows()) shape_mismatch("matmul", ta, tb);
  Tensor out(ta.rows(), tb.cols());
  view(out.data(), out).noalias() = view(ta) * view(tb);
  return g.record(std::move(out), {a, b}, [a, b](Graph& g, Var self) {
    const Tensor& ta = g.value(a);
    const Tensor& tb = g.value(b);
    auto go = view(g.grad(self), g.value(self));
    if (g.needs_grad(a)) view(g.grad(a), ta).noalias() += go * view(tb).transpose();
    if (g.needs_grad(b)) view(g.grad(b), tb).noalias() += view(ta).transpose() * go;
  });
}

Var matmul_bt(Graph& g, Var a, Var b) {
  const Tensor& ta = g.value(a);
  const Tensor& tb = g.value(b);
  if (ta.cols() != tb.cols()) shape_mismatch("matmul_bt", ta, tb);
  Tensor out(ta.rows(), tb.rows());
  view(out.data(), out).noalias() = view(ta) * view(tb).transpose();
  return g.record(std::move(out), {a, b}, [a, b](Graph& g, Var self) {
    const Tensor& ta = g.value(a);
    const Tensor& tb = g.value(b);
    auto go = view(g.grad(self), g.value(self));
    if (g.needs_grad(a)) view(g.grad(a), ta).noalias() += go * view(tb);
    if (g.needs_grad(b)) view(g.grad(b), tb).noalias() += go.transpose() * view(ta);
  });
}

Var add(Graph& g, Var a, Var b) {
  const Tensor& ta = g.value(a);
  const Tensor& tb = g.value(b);
  if (ta.rows() != tb.rows() || ta.cols() != tb.cols()) {
    shape_mismatch("add", ta, tb);
  }
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += tb.data()[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph& g, Var self) {
    const auto& go = g.grad(self);
    for (Var p : {a, b}) {
      if (!g.needs_grad(p)) continue;
      auto& gp = g.grad(p);
      for (std::size_t i = 0; i < go.size(); ++i) gp[i] += go[i];
    }
  });
}

Var add_row(Graph& g, Var x, Var bias) {
  const Tensor& tx = g.value(x);
  const Tensor& tb = g.value(bias);
  if (tb.rows() != 1 || tb.cols() != tx.cols()) shape_mismatch("add_row", tx, tb);
  Tensor out = tx;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += tb.data()[c];
  }
  return g.record(std::move(out), {x, bias}, [x, bias](Graph& g, Var self) {
    const auto& go = g.grad(self);
    const std::size_t cols = g.value(self).cols();
    if (g.needs_grad(x)) {
      auto& gx = g.grad(x);
      for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
    }
    if (g.needs_grad(bias)) {
      auto& gb = g.grad(bias);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i % cols] += go[i];
    }
  });
}

Var mul(Graph& g, Var a, Var b) {
  const Tensor& ta = g.value(a);
  const Tensor& tb = g.value(b);
  if (ta.rows() != tb.rows() || ta.cols() != tb.cols()) {
    shape_mismatch("mul", ta, tb);
  }
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= tb.data()[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph& g, Var self) {
    const auto& go = g.grad(self);
    const auto& va = g.value(a).data();
    const auto& vb = g.value(b).data();
    if (g.needs_grad(a)) {
      auto& ga = g.grad(a);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * vb[i];
    }
    if (g.needs_grad(b)) {
      auto& gb = g.grad(b);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * va[i];
    }
  });
}

Var scale(Graph& g, Var x, double s) {
  Tensor out = g.value(x);
  for (double& v : out.data()) v *= s;
  return g.record(std::move(out), {x}, [x, s](Graph& g, Var self) {
    const auto& go = g.grad(self);
    auto& gx = g.grad(x);
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += s * go[i];
  });
}

Var sum(Graph& g, Var x) {
  const auto& d = g.value(x).data();
  double s = 0.0;
  for (double v : d) s += v;
  return g.record(Tensor::scalar(s), {x}, [x](Graph& g, Var self) {
    const double go = g.grad(self)[0];
    for (double& v : g.grad(x)) v += go;
  });
}

Var relu(Graph& g, Var x) {
  Tensor out = g.value(x);
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return g.record(std::move(out), {x}, [x](Graph& g, Var self) {
    const auto& go = g.grad(self);
    const auto& vx = g.value(x).data();
    auto& gx = g.grad(x);
    for (std::size_t i = 0; i < go.size(); ++i) {
      if (vx[i] > 0.0) gx[i] += go[i];
    }
  });
}

Var gelu(Graph& g, Var x) {
  using kernels::kGeluA;
  using kernels::kGeluC;
  Tensor out = g.value(x);
  // tanh(u) = 1 - 2 / (exp(2u) + 1); cached for the backward pass.
  auto th = std::make_shared<std::vector<double>>(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = out.data()[i];
    const double u = kGeluC * (v + kGeluA * v * v * v);
    const double t = 1.0 - 2.0 / (std::exp(2.0 * u) + 1.0);
    (*th)[i] = t;
    out.data()[i] = 0.5 * v * (1.0 + t);
  }
  return g.record(std::move(out), {x}, [x, th](Graph& g, Var self) {
    const auto& go = g.grad(self);
    const auto& vx = g.value(x).data();
    auto& gx = g.grad(x);
    for (std::size_t i = 0; i < go.size(); ++i) {
      const double v = vx[i];
      const double t = (*th)[i];
      const double d = 0.5 * (1.0 + t) +
                       0.5 * v * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
      gx[i] += go[i] * d;
    }
  });
}

Var softmax_rows(Graph& g, Var x, const Tensor* mask) {
  const Tensor& tx = g.value(x);
  if (mask && (mask->rows() != tx.rows() || mask->cols() != tx.cols())) {
    shape_mismatch("softmax_rows mask", tx, *mask);
  }
  Tensor out = tx;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    if (mask) {
      auto m = mask->row(r);
      bool any_open = false;
      for (std::size_t c = 0; c < row.size(); ++c) {
        row[c] += m[c];
        any_open = any_open || std::isfinite(m[c]);
      }
      if (!any_open) {
        throw std::domain_error("softmax_rows: row " + std::to_string(r) +
                                " is fully masked");
      }
    }
    kernels::softmax_inplace(row);
  }
  return g.record(std::move(out), {x}, [x](Graph& g, Var self) {
    const Tensor& y = g.value(self);
    const auto& go = g.grad(self);
    auto& gx = g.grad(x);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const std::size_t off = r * y.cols();
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += go[off + c] * y.data()[off + c];
      for (std::size_t c = 0; c < y.cols(); ++c) {
        gx[off + c] += y.data()[off + c] * (go[off + c] - dot);
      }
    }
  });
}

Var layer_norm(Graph& g, Var x, Var gamma, Var beta, double eps) {
  const Tensor& tx = g.value(x);
  const Tensor& tg = g.value(gamma);
  const Tensor& tb = g.value(beta);
  if (tg.size() != tx.cols() || tb.size() != tx.cols()) {
    shape_mismatch("layer_norm", tx, tg);
  }
  const std::size_t n = tx.cols();
  Tensor out(tx.rows(), n);
  // Cache normalized values and inverse std for the backward pass.
  auto xhat = std::make_shared<std::vector<double>>(tx.size());
  auto inv_std = std::make_shared<std::vector<double>>(tx.rows());
  for (std::size_t r = 0; r < tx.rows(); ++r) {
    auto row = tx.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = inv;
    for (std::size_t c = 0; c < n; ++c) {
      const double h = (row[c] - mean) * inv;
      (*xhat)[r * n + c] = h;
      out(r, c) = tg.data()[c] * h + tb.data()[c];
    }
  }
  return g.record(std::move(out), {x, gamma, beta},
                  [x, gamma, beta, xhat, inv_std](Graph& g, Var self) {
    const Tensor& y = g.value(self);
    const std::size_t n = y.cols();
    const auto& go = g.grad(self);
    const auto& gam = g.value(gamma).data();
    if (g.needs_grad(gamma)) {
      auto& gg = g.grad(gamma);
      for (std::size_t i = 0; i < go.size(); ++i) gg[i % n] += go[i] * (*xhat)[i];
    }
    if (g.needs_grad(beta)) {
      auto& gb = g.grad(beta);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i % n] += go[i];
    }
    if (!g.needs_grad(x)) return;
    auto& gx = g.grad(x);
    std::vector<double> dh(n);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const std::size_t off = r * n;
      double mean_dh = 0.0;
      double mean_dh_h = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        dh[c] = go[off + c] * gam[c];
        mean_dh += dh[c];
        mean_dh_h += dh[c] * (*xhat)[off + c];
      }
      mean_dh /= static_cast<double>(n);
      mean_dh_h /= static_cast<double>(n);
      for (std::size_t c = 0; c < n; ++c) {
        gx[off + c] += (*inv_std)[r] *
                       (dh[c] - mean_dh - (*xhat)[off + c] * mean_dh_h);
      }
    }
  });
}

Var embedding(Graph& g, Var table, std::span<const std::int32_t> ids) {
  const Tensor& tt = g.value(table);
  Tensor out(ids.size(), tt.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= tt.rows()) {
      throw std::out_of_range("embedding: id " + std::to_string(ids[i]) +
                              " outside table of " + std::to_string(tt.rows()) +
                              " rows");
    }
    auto src = tt.row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  std::vector<std::int32_t> saved(ids.begin(), ids.end());
  return g.record(std::move(out), {table},
                  [table, saved = std::move(saved)](Graph& g, Var self) {
    const auto& go = g.grad(self);
    auto& gt = g.grad(table);
    const std::size_t d = g.value(self).cols();
    for (std::size_t i = 0; i < saved.size(); ++i) {
      const std::size_t base = static_cast<std::size_t>(saved[i]) * d;
      for (std::size_t c = 0; c < d; ++c) gt[base + c] += go[i * d + c];
    }
  });
}

Var cross_entropy(Graph& g, Var logits,
                  std::span<const std::int32_t> targets) {
  const Tensor& tl = g.value(logits);
  if (targets.size() != tl.rows()) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) +
                     " targets for logits " + tl.shape_string());
  }
  if (tl.rows() == 0) throw ShapeError("cross_entropy: empty logits");
  const std::size_t V = tl.cols();
  auto probs = std::make_shared<Tensor>(tl);
  double loss = 0.0;
  for (std::size_t t = 0; t < tl.rows(); ++t) {
    const std::int32_t y = targets[t];
    if (y < 0 || static_cast<std::size_t>(y) >= V) {
      throw std::out_of_range("cross_entropy: target id " + std::to_string(y) +
                              " outside [0, " + std::to_string(V) + ")");
    }
    auto row = tl.row(t);
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : row) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    loss += std::log(z) + mx - row[static_cast<std::size_t>(y)];
    auto p = probs->row(t);
    for (std::size_t c = 0; c < V; ++c) p[c] = std::exp(row[c] - mx) / z;
  }
  const double T = static_cast<double>(tl.rows());
  std::vector<std::int32_t> saved(targets.begin(), targets.end());
  return g.record(Tensor::scalar(loss / T), {logits},
                  [logits, probs, saved = std::move(saved), T](Graph& g, Var self) {
    const double go = g.grad(self)[0] / T;
    auto& gl = g.grad(logits);
    const std::size_t V = probs->cols();
    for (std::size_t t = 0; t < probs->rows(); ++t) {
      for (std::size_t c = 0; c < V; ++c) gl[t * V + c] += go * (*probs)(t, c);
      gl[t * V + static_cast<std::size_t>(saved[t])] -= go;
    }
  });
}

Var slice_cols(Graph& g, Var x, std::size_t start, std::size_t count) {
  const Tensor& tx = g.value(x);
  if (start + count > tx.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " +
                     tx.shape_string());
  }
  Tensor out(tx.rows(), count);
  for (std::size_t r = 0; r < tx.rows(); ++r) {
    auto src = tx.row(r).subspan(start, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return g.record(std::move(out), {x}, [x, start, count](Graph& g, Var self) {
    const auto& go = g.grad(self);
    auto& gx = g.grad(x);
    const std::size_t cols = g.value(x).cols();
    const std::size_t rows = g.value(self).rows();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < count; ++c) {
        gx[r * cols + start + c] += go[r * count + c];
      }
    }
  });
}

Var concat_cols(Graph& g, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = g.value(parts[0]).rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    if (g.value(p).rows() != rows) {
      shape_mismatch("concat_cols", g.value(parts[0]), g.value(p));
    }
    cols += g.value(p).cols();
  }
  Tensor out(rows, cols);
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& tp = g.value(p);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(tp.row(r).begin(), tp.row(r).end(), out.row(r).begin() + off);
    }
    off += tp.cols();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return g.record(std::move(out), saved, [saved](Graph& g, Var self) {
    const auto& go = g.grad(self);
    const std::size_t cols = g.value(self).cols();
    std::size_t off = 0;
    for (Var p : saved) {
      const std::size_t pc = g.value(p).cols();
      if (g.needs_grad(p)) {
        auto& gp = g.grad(p);
        for (std::size_t r = 0; r < g.value(self).rows(); ++r) {
          for (std::size_t c = 0; c < pc; ++c) gp[r * pc + c] += go[r * cols + off + c];
        }
      }
      off += pc;
    }
  });
}

Var laam_boost(Graph& g, Var probs, std::span<const std::int64_t> remaining,
               double boost) {
  const Tensor& tp = g.value(probs);
  if (remaining.size() != tp.rows()) {
    throw ShapeError("laam_boost: " + std::to_string(remaining.size()) +
                     " remaining lengths for " + tp.shape_string());
  }
  const std::size_t n = tp.cols();
  Tensor out = tp;
  // Per-entry multiplier c_j and per-row normalizer Z.
  auto factor = std::make_shared<std::vector<double>>(tp.size(), 1.0);
  auto norm = std::make_shared<std::vector<double>>(tp.rows(), 1.0);
  for (std::size_t r = 0; r < tp.rows(); ++r) {
    const std::size_t k =
        static_cast<std::size_t>(std::max<std::int64_t>(remaining[r], 0));
    if (k == 0 || boost == 0.0) continue;
    for (std::size_t i : kernels::top_k_indices(tp.row(r), k)) {
      (*factor)[r * n + i] = 1.0 + boost;
    }
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) z += tp(r, c) * (*factor)[r * n + c];
    (*norm)[r] = z;
    for (std::size_t c = 0; c < n; ++c) {
      out(r, c) = tp(r, c) * (*factor)[r * n + c] / z;
    }
  }
  return g.record(std::move(out), {probs},
                  [probs, factor, norm](Graph& g, Var self) {
    const Tensor& y = g.value(self);
    const auto& go = g.grad(self);
    auto& gp = g.grad(probs);
    const std::size_t n = y.cols();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const std::size_t off = r * n;
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += go[off + c] * y.data()[off + c];
      for (std::size_t c = 0; c < n; ++c) {
        gp[off + c] += (*factor)[off + c] / (*norm)[r] * (go[off + c] - dot);
      }
    }
  });
}

}  // namespace ops

}  // namespace lenctl
