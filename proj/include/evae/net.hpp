#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "evae/graph.hpp"
#include "evae/param_store.hpp"
#include "evae/rng.hpp"

namespace evae {

enum class Activation { relu, tanh, sigmoid, exp };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// x W + b with W stored as (in, out).
struct Affine {
  std::size_t in = 0;
  std::size_t out = 0;
  std::string weight;
  std::string bias;
};

using Layer = std::variant<Affine, Activation>;

/// A feed-forward layer sequence whose parameters live in a ParamStore.
class Net {
 public:
  Net() = default;
  explicit Net(std::vector<Layer> layers) : layers_(std::move(layers)) {}

  /// Dense MLP over `widths` (input first); `hidden` follows every affine
  /// layer except the last. Weights use Glorot-uniform init, biases zero.
  static Net mlp(const std::string& prefix, const std::vector<std::size_t>& widths,
                 Activation hidden, ParamStore& params, Rng& rng);
  /// Same layer layout as mlp() without touching any ParamStore; used when
  /// parameters come from a checkpoint.
  static Net mlp_layout(const std::string& prefix, const std::vector<std::size_t>& widths,
                        Activation hidden);

  const std::vector<Layer>& layers() const { return layers_; }
  bool empty() const { return layers_.empty(); }
  /// 0 when the net has no affine layer (accepts any width).
  std::size_t input_width() const;
  std::size_t output_width(std::size_t input_width) const;

  Var forward(Graph& g, Var input) const;

 private:
  std::vector<Layer> layers_;
};

}  // namespace evae
