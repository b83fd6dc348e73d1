#include "evae/net.hpp"

#include <cmath>

#include "evae/errors.hpp"

namespace evae {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::exp: return "exp";
  }
  return "?";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "exp") return Activation::exp;
  throw ConfigError("unknown activation '" + name + "'");
}

Net Net::mlp_layout(const std::string& prefix, const std::vector<std::size_t>& widths,
                    Activation hidden) {
  if (widths.size() < 2) throw ConfigError("Net::mlp: need at least input and output widths");
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    if (widths[i] == 0 || widths[i + 1] == 0) throw ConfigError("Net::mlp: zero layer width");
    layers.emplace_back(Affine{widths[i], widths[i + 1], prefix + ".w" + std::to_string(i),
                               prefix + ".b" + std::to_string(i)});
    if (i + 2 < widths.size()) layers.emplace_back(hidden);
  }
  return Net(std::move(layers));
}

Net Net::mlp(const std::string& prefix, const std::vector<std::size_t>& widths,
             Activation hidden, ParamStore& params, Rng& rng) {
  Net net = mlp_layout(prefix, widths, hidden);
  for (const auto& layer : net.layers_) {
    const auto* a = std::get_if<Affine>(&layer);
    if (a == nullptr) continue;
    const double limit = std::sqrt(6.0 / static_cast<double>(a->in + a->out));
    Tensor w = Tensor::matrix(a->in, a->out);
    for (double& v : w.values()) v = rng.uniform(-limit, limit);
    params.add(a->weight, std::move(w));
    params.add(a->bias, Tensor::matrix(1, a->out));
  }
  return net;
}

std::size_t Net::input_width() const {
  for (const auto& l : layers_) {
    if (const auto* a = std::get_if<Affine>(&l)) return a->in;
  }
  return 0;
}

std::size_t Net::output_width(std::size_t input_width) const {
  std::size_t w = input_width;
  for (const auto& l : layers_) {
    if (const auto* a = std::get_if<Affine>(&l)) w = a->out;
  }
  return w;
}

Var Net::forward(Graph& g, Var input) const {
  const Tensor& x = g.value(input);
  const std::size_t expected = input_width();
  if (expected != 0 && (x.rank() != 2 || x.cols() != expected)) {
    throw ConfigError("Net::forward: input shape " + x.shape_string() +
                      " does not match first layer width " + std::to_string(expected));
  }
  Var h = input;
  for (const auto& layer : layers_) {
    if (const auto* a = std::get_if<Affine>(&layer)) {
      h = g.add_row(g.matmul(h, g.param(a->weight)), g.param(a->bias));
      continue;
    }
    switch (std::get<Activation>(layer)) {
      case Activation::relu: h = g.relu(h); break;
      case Activation::tanh: h = g.tanh(h); break;
      case Activation::sigmoid: h = g.sigmoid(h); break;
      case Activation::exp: h = g.exp(h); break;
    }
  }
  return h;
}

}  // namespace evae
