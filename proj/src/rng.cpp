#include "evae/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "evae/errors.hpp"

namespace evae {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::cauchy() {
  double u = uniform();
  while (u == 0.0) u = uniform();
  return std::tan(std::numbers::pi * (u - 0.5));
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw UsageError("Rng::index: empty range");
  // Lemire-style rejection keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % n);
}

Rng Rng::fork(std::uint64_t tag) const {
  return Rng(splitmix64(seed_ ^ splitmix64(tag + 0x632BE59BD9B4E019ULL)));
}

std::string Rng::state() const {
  std::ostringstream os;
  os << seed_ << ' ' << engine_;
  return os.str();
}

void Rng::set_state(const std::string& text) {
  std::istringstream is(text);
  std::uint64_t seed = 0;
  std::mt19937_64 engine;
  is >> seed >> engine;
  if (!is) throw IntegrityError("Rng: malformed state string");
  seed_ = seed;
  engine_ = engine;
}

}  // namespace evae
