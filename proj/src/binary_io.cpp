#include "evae/binary_io.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

#include "evae/errors.hpp"

namespace evae::io {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

constexpr std::uint64_t kMaxLength = std::uint64_t{1} << 40;

void check(std::istream& is, const char* what) {
  if (!is) throw IntegrityError(std::string("truncated stream while reading ") + what);
}

}  // namespace

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  check(is, "u64");
  return v;
}

void write_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

double read_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  check(is, "f64");
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  const std::uint64_t n = read_u64(is);
  if (n > kMaxLength) throw IntegrityError("string length out of range");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  check(is, "string");
  return s;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  write_u64(os, t.rank());
  for (std::size_t d : t.shape()) write_u64(os, d);
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor read_tensor(std::istream& is) {
  const std::uint64_t rank = read_u64(is);
  if (rank > 8) throw IntegrityError("tensor rank out of range");
  std::vector<std::size_t> shape(rank);
  std::uint64_t count = 1;
  for (auto& d : shape) {
    d = read_u64(is);
    count *= d;
    if (count > kMaxLength) throw IntegrityError("tensor size out of range");
  }
  std::vector<double> values(count);
  is.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  check(is, "tensor");
  return Tensor(std::move(shape), std::move(values));
}

}  // namespace evae::io
