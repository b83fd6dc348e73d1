#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evae/rng.hpp"
#include "evae/tensor.hpp"

namespace evae::data {

enum class Shape : std::uint8_t { square = 0, ellipse = 1, heart = 2 };

std::string to_string(Shape s);

struct SpriteSpec {
  Shape shape = Shape::square;
  double scale = 0.3;        // side of the sprite's unit box as a fraction of the canvas
  double orientation = 0.0;  // radians, counter-clockwise
  double pos_x = 0.5;        // sprite centre as a fraction of the canvas
  double pos_y = 0.5;
};

/// Binary raster, row-major, values 0 or 1.
struct Image {
  std::size_t side = 0;
  std::vector<std::uint8_t> pixels;

  std::size_t count() const;
  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * side + col]; }
};

/// Rasterizes one sprite by testing pixel centres against the shape in its
/// rotated local frame. Throws SpecificationError if any part of the shape
/// would fall outside the canvas.
Image render_sprite(const SpriteSpec& spec, std::size_t canvas);

/// Heart membership in the sprite's local frame.
bool heart_contains(double x, double y);

struct DatasetConfig {
  std::size_t canvas = 32;
  std::size_t shapes = 3;
  std::size_t scales = 4;
  std::size_t orientations = 8;
  std::size_t positions_x = 8;
  std::size_t positions_y = 8;
  double scale_min = 0.2;
  double scale_max = 0.4;
  std::uint64_t seed = 0;

  std::size_t total() const {
    return shapes * scales * orientations * positions_x * positions_y;
  }
  void validate() const;
  bool operator==(const DatasetConfig&) const = default;
};

/// Grid indices of one image's generating factors.
struct FactorLabel {
  std::uint16_t shape = 0;
  std::uint16_t scale = 0;
  std::uint16_t orientation = 0;
  std::uint16_t pos_x = 0;
  std::uint16_t pos_y = 0;
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(DatasetConfig cfg, std::vector<Image> images, std::vector<FactorLabel> labels);

  const DatasetConfig& config() const { return cfg_; }
  std::size_t size() const { return images_.size(); }
  std::size_t pixel_count() const { return cfg_.canvas * cfg_.canvas; }
  const Image& image(std::size_t i) const { return images_.at(i); }
  const FactorLabel& label(std::size_t i) const { return labels_.at(i); }
  /// Spec that generated image i.
  SpriteSpec spec(std::size_t i) const;

  /// (indices.size(), pixel_count) tensor of 0/1 doubles.
  Tensor gather(const std::vector<std::size_t>& indices) const;

  void save(const std::filesystem::path& path) const;
  static Dataset load(const std::filesystem::path& path);
  /// Bytes of the cache file format.
  std::string serialize() const;
  static Dataset deserialize(const std::string& bytes);

  bool operator==(const Dataset& other) const;

 private:
  DatasetConfig cfg_;
  std::vector<Image> images_;
  std::vector<FactorLabel> labels_;
};

/// Factor values used by the grid.
double grid_scale(const DatasetConfig& cfg, std::size_t i);
double grid_orientation(const DatasetConfig& cfg, std::size_t i);
double grid_position(const DatasetConfig& cfg, std::size_t i, std::size_t count);

/// Cartesian product of the factor grids in lexicographic order
/// (shape, scale, orientation, pos_x, pos_y), last factor fastest.
Dataset generate_dataset(const DatasetConfig& cfg);

/// Binary PGM (P5) with 0 -> black, 1 -> white.
void write_pgm(const std::filesystem::path& path, const Image& img);
/// Greyscale PGM from values in [0, 1], `rows` x `cols` pixels.
void write_pgm(const std::filesystem::path& path, const std::vector<double>& values,
               std::size_t rows, std::size_t cols);

/// Epoch-wise batch index stream. Copies are independent and replay the same
/// sequence, which is how trials see the batches the main run will see.
class BatchIterator {
 public:
  BatchIterator() = default;
  BatchIterator(std::size_t dataset_size, std::size_t batch_size, bool shuffle, Rng rng);

  std::vector<std::size_t> next();
  std::size_t epoch() const { return epoch_; }
  std::size_t batch_size() const { return batch_size_; }

  std::string state() const;
  void set_state(const std::string& text);

  bool operator==(const BatchIterator& other) const;

 private:
  void start_epoch();

  std::size_t n_ = 0;
  std::size_t batch_size_ = 1;
  bool shuffle_ = true;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

}  // namespace evae::data
