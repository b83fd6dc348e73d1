#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "evae/tensor.hpp"

namespace evae {

/// Named trainable tensors with their gradients and Adam moment buffers.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor m;  // first moment
    Tensor v;  // second moment
  };

  /// Registers a parameter; names must be unique.
  std::size_t add(const std::string& name, Tensor init);
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  Entry& entry(std::size_t i) { return entries_.at(i); }
  const Entry& entry(std::size_t i) const { return entries_.at(i); }
  Tensor& value(const std::string& name) { return entries_[index_of(name)].value; }
  const Tensor& value(const std::string& name) const {
    return entries_[index_of(name)].value;
  }
  const Tensor& grad(const std::string& name) const {
    return entries_[index_of(name)].grad;
  }
  const std::vector<Entry>& entries() const { return entries_; }

  void zero_grad();

  /// Number of Adam updates applied so far.
  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t s) { step_ = s; }

  /// Binary, little-endian, raw IEEE-754 doubles: round trips bit-exactly.
  void write(std::ostream& os) const;
  static ParamStore read(std::istream& is);

  bool operator==(const ParamStore& other) const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
  std::uint64_t step_ = 0;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam update with bias correction over every parameter.
void adam_step(ParamStore& params, const AdamConfig& cfg);

}  // namespace evae
