#pragma once

#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace evae {

/// Cache-line aligned storage. Vectorized reductions peel according to the
/// buffer address; a fixed alignment keeps their summation order, and hence
/// every result bit, independent of where the allocator placed the data.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

/// Dense row-major array of doubles.
///
/// Rank 0..2 is all the VAE code needs; matrices are (rows, cols) and a
/// scalar has an empty shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({}, std::vector<double>{v}); }
  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor row(std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  /// Leading dimension for rank 2, 1 for vectors and scalars.
  std::size_t rows() const;
  /// Trailing dimension for rank >= 1, 1 for scalars.
  std::size_t cols() const;

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  double item() const;

  void fill(double v);
  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool operator==(const Tensor& other) const = default;

  std::string shape_string() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double, AlignedAllocator<double>> values_;
};

}  // namespace evae
