#include "evae/sprites.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "evae/binary_io.hpp"
#include "evae/errors.hpp"

namespace evae::data {
namespace {

constexpr char kMagic[8] = {'E', 'V', 'A', 'E', 'D', 'S', 'E', 'T'};
constexpr std::uint64_t kVersion = 1;
// Heart polynomial spans roughly [-1.14, 1.14] x [-1, 1.24]; this maps the
// unit box onto it.
constexpr double kHeartZoom = 1.25;

bool shape_contains(Shape shape, double u, double v) {
  switch (shape) {
    case Shape::square: return std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
    case Shape::ellipse: return u * u + 4.0 * v * v <= 1.0;
    case Shape::heart: return heart_contains(u * kHeartZoom, -v * kHeartZoom);
  }
  return false;
}

// Furthest a shape reaches from its centre in unit-box coordinates.
constexpr double kMaxReach = std::numbers::sqrt2;

}  // namespace

std::string to_string(Shape s) {
  switch (s) {
    case Shape::square: return "square";
    case Shape::ellipse: return "ellipse";
    case Shape::heart: return "heart";
  }
  return "?";
}

std::size_t Image::count() const {
  std::size_t n = 0;
  for (auto p : pixels) n += p;
  return n;
}

bool heart_contains(double x, double y) {
  const double a = x * x + y * y - 1.0;
  return a * a * a - x * x * y * y * y <= 0.0;
}

Image render_sprite(const SpriteSpec& spec, std::size_t canvas) {
  if (canvas == 0) throw SpecificationError("render_sprite: empty canvas");
  if (!(spec.scale > 0.0 && spec.scale <= 1.0)) {
    throw SpecificationError("render_sprite: scale must lie in (0, 1]");
  }
  if (!(spec.pos_x >= 0.0 && spec.pos_x <= 1.0 && spec.pos_y >= 0.0 && spec.pos_y <= 1.0)) {
    throw SpecificationError("render_sprite: position must lie in [0, 1]");
  }
  const double w = static_cast<double>(canvas);
  const double half = 0.5 * spec.scale * w;
  const double cx = spec.pos_x * w;
  const double cy = spec.pos_y * w;
  const double c = std::cos(spec.orientation);
  const double s = std::sin(spec.orientation);

  Image img{canvas, std::vector<std::uint8_t>(canvas * canvas, 0)};
  const auto pad = static_cast<long>(std::ceil(half * kMaxReach)) + 1;
  const auto n = static_cast<long>(canvas);
  for (long row = -pad; row < n + pad; ++row) {
    for (long col = -pad; col < n + pad; ++col) {
      const double dx = (static_cast<double>(col) + 0.5) - cx;
      const double dy = (static_cast<double>(row) + 0.5) - cy;
      const double u = (dx * c + dy * s) / half;
      const double v = (-dx * s + dy * c) / half;
      if (!shape_contains(spec.shape, u, v)) continue;
      if (row < 0 || col < 0 || row >= n || col >= n) {
        throw SpecificationError("render_sprite: " + to_string(spec.shape) +
                                 " clips the canvas at this scale and position");
      }
      img.pixels[static_cast<std::size_t>(row * n + col)] = 1;
    }
  }
  return img;
}

void DatasetConfig::validate() const {
  if (canvas < 4) throw ConfigError("DatasetConfig: canvas must be at least 4 pixels");
  if (shapes < 1 || shapes > 3) throw ConfigError("DatasetConfig: shapes must be 1..3");
  if (scales < 1 || orientations < 1 || positions_x < 1 || positions_y < 1) {
    throw ConfigError("DatasetConfig: every factor grid needs at least one value");
  }
  if (!(scale_min > 0.0 && scale_min <= scale_max && scale_max <= 1.0)) {
    throw ConfigError("DatasetConfig: need 0 < scale_min <= scale_max <= 1");
  }
  if (scale_max * kMaxReach >= 1.0) {
    throw ConfigError("DatasetConfig: scale_max too large for any sprite to fit");
  }
}

double grid_scale(const DatasetConfig& cfg, std::size_t i) {
  if (cfg.scales == 1) return cfg.scale_max;
  return cfg.scale_min + (cfg.scale_max - cfg.scale_min) * static_cast<double>(i) /
                             static_cast<double>(cfg.scales - 1);
}

double grid_orientation(const DatasetConfig& cfg, std::size_t i) {
  return 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(cfg.orientations);
}

double grid_position(const DatasetConfig& cfg, std::size_t i, std::size_t count) {
  // Keep the largest rotated sprite plus half a pixel inside the canvas.
  const double w = static_cast<double>(cfg.canvas);
  const double lo = (0.5 * cfg.scale_max * w * kMaxReach + 0.5) / w;
  const double hi = 1.0 - lo;
  if (count == 1) return 0.5;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
}

Dataset::Dataset(DatasetConfig cfg, std::vector<Image> images, std::vector<FactorLabel> labels)
    : cfg_(std::move(cfg)), images_(std::move(images)), labels_(std::move(labels)) {
  if (images_.size() != labels_.size()) throw IntegrityError("Dataset: image/label count mismatch");
}

SpriteSpec Dataset::spec(std::size_t i) const {
  const auto& l = label(i);
  return {static_cast<Shape>(l.shape), grid_scale(cfg_, l.scale),
          grid_orientation(cfg_, l.orientation), grid_position(cfg_, l.pos_x, cfg_.positions_x),
          grid_position(cfg_, l.pos_y, cfg_.positions_y)};
}

Tensor Dataset::gather(const std::vector<std::size_t>& indices) const {
  const std::size_t p = pixel_count();
  Tensor out = Tensor::matrix(indices.size(), p);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& px = image(indices[r]).pixels;
    double* dst = out.data() + r * p;
    for (std::size_t k = 0; k < p; ++k) dst[k] = px[k];
  }
  return out;
}

std::string Dataset::serialize() const {
  std::ostringstream os(std::ios::binary);
  os.write(kMagic, sizeof kMagic);
  io::write_u64(os, kVersion);
  io::write_u64(os, cfg_.canvas);
  for (std::size_t g : {cfg_.shapes, cfg_.scales, cfg_.orientations, cfg_.positions_x,
                        cfg_.positions_y}) {
    io::write_u64(os, g);
  }
  io::write_f64(os, cfg_.scale_min);
  io::write_f64(os, cfg_.scale_max);
  io::write_u64(os, cfg_.seed);
  io::write_u64(os, images_.size());
  // Pixel rows packed 8 per byte, most significant bit first.
  const std::size_t row_bytes = (cfg_.canvas + 7) / 8;
  for (const auto& img : images_) {
    for (std::size_t r = 0; r < cfg_.canvas; ++r) {
      std::vector<char> packed(row_bytes, 0);
      for (std::size_t c = 0; c < cfg_.canvas; ++c) {
        if (img.at(r, c)) packed[c / 8] = static_cast<char>(packed[c / 8] | (0x80 >> (c % 8)));
      }
      os.write(packed.data(), static_cast<std::streamsize>(row_bytes));
    }
  }
  for (const auto& l : labels_) {
    for (std::uint16_t v : {l.shape, l.scale, l.orientation, l.pos_x, l.pos_y}) {
      os.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
  return os.str();
}

Dataset Dataset::deserialize(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || !std::equal(magic, magic + 8, kMagic)) {
    throw IntegrityError("dataset cache: bad magic");
  }
  if (io::read_u64(is) != kVersion) throw IntegrityError("dataset cache: unsupported version");
  DatasetConfig cfg;
  cfg.canvas = io::read_u64(is);
  cfg.shapes = io::read_u64(is);
  cfg.scales = io::read_u64(is);
  cfg.orientations = io::read_u64(is);
  cfg.positions_x = io::read_u64(is);
  cfg.positions_y = io::read_u64(is);
  cfg.scale_min = io::read_f64(is);
  cfg.scale_max = io::read_f64(is);
  cfg.seed = io::read_u64(is);
  cfg.validate();
  const std::uint64_t n = io::read_u64(is);
  if (n != cfg.total()) throw IntegrityError("dataset cache: image count does not match grids");
  const std::size_t row_bytes = (cfg.canvas + 7) / 8;
  std::vector<Image> images(n);
  std::vector<char> packed(row_bytes);
  for (auto& img : images) {
    img.side = cfg.canvas;
    img.pixels.assign(cfg.canvas * cfg.canvas, 0);
    for (std::size_t r = 0; r < cfg.canvas; ++r) {
      is.read(packed.data(), static_cast<std::streamsize>(row_bytes));
      for (std::size_t c = 0; c < cfg.canvas; ++c) {
        img.pixels[r * cfg.canvas + c] = (packed[c / 8] & (0x80 >> (c % 8))) ? 1 : 0;
      }
    }
  }
  std::vector<FactorLabel> labels(n);
  for (auto& l : labels) {
    for (std::uint16_t* v : {&l.shape, &l.scale, &l.orientation, &l.pos_x, &l.pos_y}) {
      is.read(reinterpret_cast<char*>(v), sizeof *v);
    }
  }
  if (!is) throw IntegrityError("dataset cache: truncated file");
  return Dataset(cfg, std::move(images), std::move(labels));
}

void Dataset::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  const std::string bytes = serialize();
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw ConfigError("cannot write dataset cache " + path.string());
}

Dataset Dataset::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read dataset cache " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return deserialize(buf.str());
}

bool Dataset::operator==(const Dataset& other) const {
  if (!(cfg_ == other.cfg_) || images_.size() != other.images_.size()) return false;
  for (std::size_t i = 0; i < images_.size(); ++i) {
    if (images_[i].pixels != other.images_[i].pixels) return false;
    const auto& a = labels_[i];
    const auto& b = other.labels_[i];
    if (a.shape != b.shape || a.scale != b.scale || a.orientation != b.orientation ||
        a.pos_x != b.pos_x || a.pos_y != b.pos_y) {
      return false;
    }
  }
  return true;
}

Dataset generate_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  std::vector<Image> images;
  std::vector<FactorLabel> labels;
  images.reserve(cfg.total());
  labels.reserve(cfg.total());
  for (std::size_t sh = 0; sh < cfg.shapes; ++sh) {
    for (std::size_t sc = 0; sc < cfg.scales; ++sc) {
      for (std::size_t o = 0; o < cfg.orientations; ++o) {
        for (std::size_t px = 0; px < cfg.positions_x; ++px) {
          for (std::size_t py = 0; py < cfg.positions_y; ++py) {
            const SpriteSpec spec{static_cast<Shape>(sh), grid_scale(cfg, sc),
                                  grid_orientation(cfg, o),
                                  grid_position(cfg, px, cfg.positions_x),
                                  grid_position(cfg, py, cfg.positions_y)};
            images.push_back(render_sprite(spec, cfg.canvas));
            labels.push_back({static_cast<std::uint16_t>(sh), static_cast<std::uint16_t>(sc),
                              static_cast<std::uint16_t>(o), static_cast<std::uint16_t>(px),
                              static_cast<std::uint16_t>(py)});
          }
        }
      }
    }
  }
  return Dataset(cfg, std::move(images), std::move(labels));
}

void write_pgm(const std::filesystem::path& path, const Image& img) {
  std::vector<double> v(img.pixels.begin(), img.pixels.end());
  write_pgm(path, v, img.side, img.side);
}

void write_pgm(const std::filesystem::path& path, const std::vector<double>& values,
               std::size_t rows, std::size_t cols) {
  if (values.size() != rows * cols) throw ConfigError("write_pgm: size mismatch");
  std::ofstream os(path, std::ios::binary);
  os << "P5\n" << cols << ' ' << rows << "\n255\n";
  for (double v : values) {
    const double c = std::clamp(v, 0.0, 1.0);
    os.put(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
  if (!os) throw ConfigError("cannot write image " + path.string());
}

BatchIterator::BatchIterator(std::size_t dataset_size, std::size_t batch_size, bool shuffle,
                             Rng rng)
    : n_(dataset_size), batch_size_(batch_size), shuffle_(shuffle), rng_(std::move(rng)) {
  if (batch_size_ < 1) throw ConfigError("BatchIterator: batch_size must be >= 1");
  if (n_ == 0) throw ConfigError("BatchIterator: empty dataset");
  start_epoch();
  epoch_ = 0;
}

void BatchIterator::start_epoch() {
  order_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
  if (shuffle_) {
    for (std::size_t i = n_; i > 1; --i) std::swap(order_[i - 1], order_[rng_.index(i)]);
  }
  cursor_ = 0;
}

std::vector<std::size_t> BatchIterator::next() {
  if (cursor_ >= n_) {
    start_epoch();
    ++epoch_;
  }
  const std::size_t end = std::min(n_, cursor_ + batch_size_);
  std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                               order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return out;
}

std::string BatchIterator::state() const {
  std::ostringstream os;
  os << n_ << ' ' << batch_size_ << ' ' << shuffle_ << ' ' << cursor_ << ' ' << epoch_ << ' ';
  for (auto i : order_) os << i << ' ';
  os << '\n' << rng_.state();
  return os.str();
}

void BatchIterator::set_state(const std::string& text) {
  std::istringstream is(text);
  BatchIterator it;
  is >> it.n_ >> it.batch_size_ >> it.shuffle_ >> it.cursor_ >> it.epoch_;
  it.order_.resize(it.n_);
  for (auto& i : it.order_) is >> i;
  is >> std::ws;
  std::string rng_state;
  std::getline(is, rng_state);
  if (!is && !is.eof()) throw IntegrityError("BatchIterator: malformed state");
  it.rng_.set_state(rng_state);
  *this = std::move(it);
}

bool BatchIterator::operator==(const BatchIterator& other) const {
  return n_ == other.n_ && batch_size_ == other.batch_size_ && shuffle_ == other.shuffle_ &&
         rng_ == other.rng_ && order_ == other.order_ && cursor_ == other.cursor_ &&
         epoch_ == other.epoch_;
}

}  // namespace evae::data
