#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace evae {

/// Seedable random source with an explicit, serializable state.
///
/// All distributions are implemented here rather than through
/// std::*_distribution so draws are reproducible across standard libraries and
/// no hidden cached values escape serialization.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();
  /// Standard Cauchy(0, 1) by inverse CDF.
  double cauchy();
  std::size_t index(std::size_t n);

  /// Independent stream derived from the seed and a tag. Does not advance
  /// this generator.
  Rng fork(std::uint64_t tag) const;

  std::string state() const;
  void set_state(const std::string& text);

  bool operator==(const Rng& other) const {
    return seed_ == other.seed_ && engine_ == other.engine_;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace evae
