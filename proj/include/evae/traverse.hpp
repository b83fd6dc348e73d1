#pragma once

#include <cstddef>
#include <vector>

#include "evae/tensor.hpp"
#include "evae/vae.hpp"

namespace evae {

/// Tiled decoder outputs: one row of `steps` tiles per traversed dimension.
struct TraversalGrid {
  std::size_t tile = 0;   // tile side in pixels
  std::size_t steps = 0;  // tiles per row
  std::size_t dims = 0;   // tile rows
  std::vector<double> pixels;  // (dims * tile) x (steps * tile), row-major

  std::size_t height() const { return dims * tile; }
  std::size_t width() const { return steps * tile; }
};

/// Encodes `image` (1 x P) to its posterior mean, sweeps each listed latent
/// dimension linearly over [lo, hi] with the others held fixed, and decodes
/// every point to pixel means. steps == 1 decodes the unmodified mean.
TraversalGrid latent_traversal(const VaeModel& model, const Tensor& image,
                               const std::vector<std::size_t>& dims, double lo = -3.0,
                               double hi = 3.0, std::size_t steps = 10);

}  // namespace evae
