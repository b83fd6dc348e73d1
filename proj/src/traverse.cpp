#include "evae/traverse.hpp"

#include <cmath>

#include "evae/errors.hpp"

namespace evae {

TraversalGrid latent_traversal(const VaeModel& model, const Tensor& image,
                               const std::vector<std::size_t>& dims, double lo, double hi,
                               std::size_t steps) {
  if (steps < 1) throw UsageError("traverse: steps must be >= 1");
  if (dims.empty()) throw UsageError("traverse: no latent dimension selected");
  for (auto d : dims) {
    if (d >= model.latent_dim()) {
      throw UsageError("traverse: dim " + std::to_string(d) + " out of range (latent_dim " +
                       std::to_string(model.latent_dim()) + ")");
    }
  }
  if (image.rank() != 2 || image.rows() != 1 || image.cols() != model.input_dim()) {
    throw UsageError("traverse: seed image must be 1 x " + std::to_string(model.input_dim()));
  }
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(model.input_dim())));
  if (side * side != model.input_dim()) throw UsageError("traverse: input is not a square image");

  const Tensor mu = model.encode(image).mu;
  const std::size_t latent = model.latent_dim();
  Tensor z = Tensor::matrix(dims.size() * steps, latent);
  for (std::size_t r = 0; r < dims.size(); ++r) {
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t row = r * steps + s;
      for (std::size_t k = 0; k < latent; ++k) z.at(row, k) = mu.at(0, k);
      if (steps > 1) {
        z.at(row, dims[r]) =
            lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(steps - 1);
      }
    }
  }
  const Tensor decoded = model.decode_mean(z);

  TraversalGrid grid;
  grid.tile = side;
  grid.steps = steps;
  grid.dims = dims.size();
  grid.pixels.assign(grid.height() * grid.width(), 0.0);
  for (std::size_t r = 0; r < dims.size(); ++r) {
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t src = r * steps + s;
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          grid.pixels[(r * side + y) * grid.width() + s * side + x] =
              decoded.at(src, y * side + x);
        }
      }
    }
  }
  return grid;
}

}  // namespace evae
