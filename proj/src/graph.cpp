#include "evae/graph.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <utility>
#include <cmath>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "evae/errors.hpp"

namespace evae {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

#if defined(__GLIBC__)
// Activations are re-allocated every step; serving them from the heap
// instead of fresh mmap pages avoids a page-fault storm per step.
const bool kMallocTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
  return true;
}();
#endif

MatMap as_matrix(Tensor& t) {
  return MatMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

ConstMatMap as_matrix(const Tensor& t) {
  return ConstMatMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                     static_cast<Eigen::Index>(t.cols()));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <class F>
Tensor map_values(const Tensor& in, F f) {
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return out;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ConfigError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                      b.shape_string());
  }
}

}  // namespace

Var Graph::push(Tensor value, const char* op, std::initializer_list<Var> inputs,
                std::function<void()> backprop) {
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
  Node n;
  n.own = std::move(value);
  for (Var in : inputs) n.requires_grad = n.requires_grad || needs(in);
  if (n.requires_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tensor& Graph::require_matrix(Var v, const char* op) const {
  const Tensor& t = value(v);
  if (t.rank() != 2) {
    throw ConfigError(std::string(op) + ": expected a matrix, got shape " + t.shape_string());
  }
  return t;
}

Var Graph::constant(Tensor value) { return push(std::move(value), "constant", {}, {}); }

Var Graph::param(std::size_t index) {
  if (read_params_ == nullptr) throw UsageError("Graph::param: no ParamStore bound");
  Node n;
  n.ref = &read_params_->entry(index).value;
  if (params_ != nullptr) {
    n.grad_ref = &params_->entry(index).grad;
    n.requires_grad = true;
  }
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::param(const std::string& name) {
  if (read_params_ == nullptr) throw UsageError("Graph::param: no ParamStore bound");
  return param(read_params_->index_of(name));
}

Var Graph::matmul(Var a, Var b) {
  const Tensor& ta = require_matrix(a, "matmul");
  const Tensor& tb = require_matrix(b, "matmul");
  if (ta.cols() != tb.rows()) {
    throw ConfigError("matmul: inner dimensions differ " + ta.shape_string() + " x " +
                      tb.shape_string());
  }
  Tensor out = Tensor::matrix(ta.rows(), tb.cols());
  as_matrix(out).noalias() = as_matrix(ta) * as_matrix(tb);
  return push(std::move(out), "matmul", {a, b}, [this, a, b, id = nodes_.size()] {
    const auto g = as_matrix(std::as_const(nodes_[id].grad));
    if (needs(a)) as_matrix(grad_of(a)).noalias() += g * as_matrix(value(b)).transpose();
    if (needs(b)) as_matrix(grad_of(b)).noalias() += as_matrix(value(a)).transpose() * g;
  });
}

Var Graph::add_row(Var a, Var row) {
  const Tensor& ta = require_matrix(a, "add_row");
  const Tensor& tr = value(row);
  if (tr.size() != ta.cols() || tr.rows() != 1) {
    throw ConfigError("add_row: row of shape " + tr.shape_string() +
                      " does not broadcast over " + ta.shape_string());
  }
  Tensor out = ta;
  as_matrix(out).rowwise() += as_matrix(tr).row(0);
  return push(std::move(out), "add_row", {a, row}, [this, a, row, id = nodes_.size()] {
    const auto g = as_matrix(std::as_const(nodes_[id].grad));
    if (needs(a)) as_matrix(grad_of(a)) += g;
    if (needs(row)) as_matrix(grad_of(row)).row(0) += g.colwise().sum();
  });
}

Var Graph::add(Var a, Var b) {
  check_same_shape(value(a), value(b), "add");
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += value(b)[i];
  return push(std::move(out), "add", {a, b}, [this, a, b, id = nodes_.size()] {
    const Tensor& g = nodes_[id].grad;
    for (Var in : {a, b}) {
      if (!needs(in)) continue;
      Tensor& gi = grad_of(in);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var Graph::sub(Var a, Var b) {
  check_same_shape(value(a), value(b), "sub");
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= value(b)[i];
  return push(std::move(out), "sub", {a, b}, [this, a, b, id = nodes_.size()] {
    const Tensor& g = nodes_[id].grad;
    if (needs(a)) {
      Tensor& ga = grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (needs(b)) {
      Tensor& gb = grad_of(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var Graph::mul(Var a, Var b) {
  check_same_shape(value(a), value(b), "mul");
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= value(b)[i];
  return push(std::move(out), "mul", {a, b}, [this, a, b, id = nodes_.size()] {
    const Tensor& g = nodes_[id].grad;
    if (needs(a)) {
      Tensor& ga = grad_of(a);
      const Tensor& vb = value(b);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (needs(b)) {
      Tensor& gb = grad_of(b);
      const Tensor& va = value(a);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

Var Graph::scale(Var a, double k) {
  Tensor out = map_values(value(a), [k](double x) { return k * x; });
  return push(std::move(out), "scale", {a}, [this, a, k, id = nodes_.size()] {
    const Tensor& g = nodes_[id].grad;
    Tensor& ga = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += k * g[i];
  });
}

Var Graph::add_scalar(Var a, double k) {
  Tensor out = map_values(value(a), [k](double x) { return x + k; });
  return push(std::move(out), "add_scalar", {a}, [this, a, id = nodes_.size()] {
    const Tensor& g = nodes_[id].grad;
    Tensor& ga = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var Graph::relu(Var a) {
  Tensor out = map_values(value(a), [](double x) { return x > 0.0 ? x : 0.0; });
  return push(std::move(out), "relu", {a}, [this, a, id = nodes_.size()] {
    const Tensor& g = nodes_[id].grad;
    const Tensor& x = value(a);
    Tensor& ga = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > 0.0) ga[i] += g[i];
    }
  });
}

Var Graph::tanh(Var a) {
  Tensor out = map_values(value(a), [](double x) { return std::tanh(x); });
  return push(std::move(out), "tanh", {a}, [this, a, id = nodes_.size()] {
    const Tensor& g = nodes_[id].grad;
    const Tensor& y = nodes_[id].own;
    Tensor& ga = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Graph::sigmoid(Var a) {
  Tensor out = map_values(value(a), logistic);
  return push(std::move(out), "sigmoid", {a}, [this, a, id = nodes_.size()] {
    const Tensor& g = nodes_[id].grad;
    const Tensor& y = nodes_[id].own;
    Tensor& ga = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Graph::exp(Var a) {
  Tensor out = map_values(value(a), [](double x) { return std::exp(x); });
  return push(std::move(out), "exp", {a}, [this, a, id = nodes_.size()] {
    const Tensor& g = nodes_[id].grad;
    const Tensor& y = nodes_[id].own;
    Tensor& ga = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  });
}

Var Graph::square(Var a) {
  Tensor out = map_values(value(a), [](double x) { return x * x; });
  return push(std::move(out), "square", {a}, [this, a, id = nodes_.size()] {
    const Tensor& g = nodes_[id].grad;
    const Tensor& x = value(a);
    Tensor& ga = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * x[i] * g[i];
  });
}

Var Graph::slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& ta = require_matrix(a, "slice_cols");
  if (begin + count > ta.cols()) throw ConfigError("slice_cols: range exceeds " + ta.shape_string());
  Tensor out = Tensor::matrix(ta.rows(), count);
  as_matrix(out) = as_matrix(ta).middleCols(static_cast<Eigen::Index>(begin),
                                            static_cast<Eigen::Index>(count));
  return push(std::move(out), "slice_cols", {a}, [this, a, begin, count, id = nodes_.size()] {
    as_matrix(grad_of(a)).middleCols(static_cast<Eigen::Index>(begin),
                                     static_cast<Eigen::Index>(count)) +=
        as_matrix(std::as_const(nodes_[id].grad));
  });
}

Var Graph::sum(Var a) {
  double s = 0.0;
  for (double x : value(a).values()) s += x;
  return push(Tensor::scalar(s), "sum", {a}, [this, a, id = nodes_.size()] {
    const double g = nodes_[id].grad.item();
    for (double& x : grad_of(a).values()) x += g;
  });
}

Var Graph::mean_rows(Var a) {
  const Tensor& ta = require_matrix(a, "mean_rows");
  Tensor out = Tensor::matrix(1, ta.cols());
  as_matrix(out) = as_matrix(ta).colwise().mean();
  return push(std::move(out), "mean_rows", {a}, [this, a, id = nodes_.size()] {
    const double inv = 1.0 / static_cast<double>(value(a).rows());
    as_matrix(grad_of(a)).rowwise() += inv * as_matrix(std::as_const(nodes_[id].grad)).row(0);
  });
}

Var Graph::bernoulli_nll(Var logits, const Tensor& target) {
  const Tensor& l = require_matrix(logits, "bernoulli_nll");
  check_same_shape(l, target, "bernoulli_nll");
  const auto n = static_cast<Eigen::Index>(l.size());
  Eigen::Map<const Eigen::ArrayXd> lv(l.data(), n);
  Eigen::Map<const Eigen::ArrayXd> xv(target.data(), n);
  // -[x log p + (1-x) log(1-p)] = softplus(l) - x * l, with
  // softplus(l) = max(l, 0) + log1p(exp(-|l|)).
  Tensor decay(l.shape());
  Eigen::Map<Eigen::ArrayXd> e(decay.data(), n);
  e = (-lv.abs()).exp();
  const double total = (lv.max(0.0) + e.log1p() - xv * lv).sum();
  const double inv_n = 1.0 / static_cast<double>(l.rows());
  return push(Tensor::scalar(total * inv_n), "bernoulli_nll", {logits},
              [this, logits, target, decay = std::move(decay), inv_n, id = nodes_.size()] {
                const double g = nodes_[id].grad.item() * inv_n;
                const Tensor& lt = value(logits);
                const auto n = static_cast<Eigen::Index>(lt.size());
                Eigen::Map<const Eigen::ArrayXd> lv(lt.data(), n);
                Eigen::Map<const Eigen::ArrayXd> xv(target.data(), n);
                Eigen::Map<const Eigen::ArrayXd> e(decay.data(), n);
                Eigen::Map<Eigen::ArrayXd> gl(grad_of(logits).data(), n);
                // sigmoid(l) is 1/(1+e) for l >= 0 and e/(1+e) otherwise.
                const auto p = (lv >= 0.0).select(1.0 / (1.0 + e), e / (1.0 + e));
                gl += g * (p - xv);
              });
}

Var Graph::gaussian_nll(Var mean, const Tensor& target) {
  const Tensor& m = require_matrix(mean, "gaussian_nll");
  check_same_shape(m, target, "gaussian_nll");
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double d = m[i] - target[i];
    total += 0.5 * d * d + kHalfLog2Pi;
  }
  const double inv_n = 1.0 / static_cast<double>(m.rows());
  return push(Tensor::scalar(total * inv_n), "gaussian_nll", {mean},
              [this, mean, target, inv_n, id = nodes_.size()] {
                const double g = nodes_[id].grad.item() * inv_n;
                const Tensor& mv = value(mean);
                Tensor& gm = grad_of(mean);
                for (std::size_t i = 0; i < mv.size(); ++i) gm[i] += g * (mv[i] - target[i]);
              });
}

const Tensor& Graph::grad(Var v) const {
  if (!backward_done_) throw UsageError("Graph::grad: backward() has not run");
  const Node& n = nodes_.at(v.id);
  return n.grad_ref ? *n.grad_ref : n.grad;
}

void Graph::backward(Var loss) {
  if (nodes_.empty() || loss.id >= nodes_.size()) {
    throw UsageError("Graph::backward: no forward pass recorded");
  }
  if (backward_done_) throw UsageError("Graph::backward: already called on this graph");
  if (params_ == nullptr && read_params_ != nullptr) {
    throw UsageError("Graph::backward: graph is inference-only");
  }
  if (value(loss).size() != 1) {
    throw UsageError("Graph::backward: loss must be a scalar, got " + value(loss).shape_string());
  }
  for (auto& n : nodes_) {
    if (n.grad_ref == nullptr) n.grad = Tensor((n.ref ? *n.ref : n.own).shape());
  }
  // Seed; a parameter used directly as the loss writes into its store gradient.
  grad_of(loss).fill(0.0);
  grad_of(loss)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (nodes_[i].backprop) nodes_[i].backprop();
  }
  backward_done_ = true;
  for (std::size_t i = 0; i <= loss.id; ++i) {
    if (nodes_[i].requires_grad && !grad_of(Var{i}).all_finite()) {
      throw NumericError("non-finite gradient in backward pass");
    }
  }
}

}  // namespace evae
