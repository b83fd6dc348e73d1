#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "evae/param_store.hpp"
#include "evae/tensor.hpp"

namespace evae {

/// Handle to a node recorded on a Graph.
struct Var {
  std::size_t id = 0;
};

/// Reverse-mode tape over dense tensors.
///
/// Every operation evaluates eagerly and records a closure that pushes its
/// output gradient to its inputs. Parameter leaves write their gradient back
/// into the bound ParamStore on backward(). Any non-finite value produced by
/// an operation throws NumericError immediately.
///
/// A Graph is single-use per loss: build, call backward() once, discard.
class Graph {
 public:
  Graph() = default;
  /// Trainable graph: backward() accumulates into `params`.
  explicit Graph(ParamStore* params) : params_(params), read_params_(params) {}
  /// Inference-only graph over a const ParamStore.
  explicit Graph(const ParamStore& params) : read_params_(&params) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to parameter `index` of the ParamStore.
  Var param(std::size_t index);
  Var param(const std::string& name);

  /// (n, k) x (k, m) -> (n, m)
  Var matmul(Var a, Var b);
  /// Adds a (1, m) or (m) row to every row of an (n, m) matrix.
  Var add_row(Var a, Var row);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double k);
  Var add_scalar(Var a, double k);
  Var relu(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var exp(Var a);
  Var square(Var a);
  /// Columns [begin, begin + count) of a matrix.
  Var slice_cols(Var a, std::size_t begin, std::size_t count);
  /// Scalar sum of all elements.
  Var sum(Var a);
  /// Column-wise mean over rows: (n, m) -> (1, m).
  Var mean_rows(Var a);
  /// Mean over rows of the per-row Bernoulli negative log-likelihood of
  /// `target` under logits, in the stable softplus form.
  Var bernoulli_nll(Var logits, const Tensor& target);
  /// Mean over rows of the per-row unit-variance Gaussian negative
  /// log-likelihood of `target` around `mean`.
  Var gaussian_nll(Var mean, const Tensor& target);

  const Tensor& value(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.ref ? *n.ref : n.own;
  }
  /// Gradient of the last backward() root with respect to `v`.
  const Tensor& grad(Var v) const;
  std::size_t node_count() const { return nodes_.size(); }

  /// Propagates d(loss)/d(node) through the tape and accumulates parameter
  /// gradients into the bound ParamStore.
  void backward(Var loss);

 private:
  struct Node {
    Tensor own;
    const Tensor* ref = nullptr;  // parameter value, not copied
    Tensor grad;
    Tensor* grad_ref = nullptr;   // parameter gradient in the ParamStore
    bool requires_grad = false;
    std::function<void()> backprop;
  };

  Var push(Tensor value, const char* op, std::initializer_list<Var> inputs,
           std::function<void()> backprop);
  bool needs(Var v) const { return nodes_[v.id].requires_grad; }
  Tensor& grad_of(Var v) {
    Node& n = nodes_[v.id];
    return n.grad_ref ? *n.grad_ref : n.grad;
  }
  const Tensor& require_matrix(Var v, const char* op) const;

  ParamStore* params_ = nullptr;
  const ParamStore* read_params_ = nullptr;
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace evae
