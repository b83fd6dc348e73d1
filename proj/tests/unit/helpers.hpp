#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "evae/graph.hpp"
#include "evae/param_store.hpp"
#include "evae/rng.hpp"

namespace evae::test {

inline Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

/// Largest relative error between backward gradients and central differences
/// of `loss` over every scalar in `params`. The denominator floor keeps tiny
/// gradients from inflating the ratio.
inline double max_gradient_error(ParamStore& params,
                                 const std::function<Var(Graph&)>& loss, double h = 1e-5,
                                 double floor = 1e-3) {
  params.zero_grad();
  {
    Graph g(&params);
    g.backward(loss(g));
  }
  auto eval = [&] {
    Graph g(static_cast<const ParamStore&>(params));
    return g.value(loss(g)).item();
  };
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& e = params.entry(p);
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double keep = e.value[i];
      e.value[i] = keep + h;
      const double up = eval();
      e.value[i] = keep - h;
      const double down = eval();
      e.value[i] = keep;
      const double fd = (up - down) / (2.0 * h);
      const double an = e.grad[i];
      const double denom = std::max({std::abs(fd), std::abs(an), floor});
      const double err = denom > 0.0 ? std::abs(fd - an) / denom : 0.0;
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace evae::test
