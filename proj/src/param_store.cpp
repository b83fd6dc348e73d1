#include "evae/param_store.hpp"

#include <Eigen/Core>

#include <cmath>
#include <istream>
#include <ostream>

#include "evae/binary_io.hpp"
#include "evae/errors.hpp"

namespace evae {

std::size_t ParamStore::add(const std::string& name, Tensor init) {
  if (contains(name)) throw ConfigError("ParamStore: duplicate parameter " + name);
  Entry e;
  e.name = name;
  e.grad = Tensor(init.shape());
  e.m = Tensor(init.shape());
  e.v = Tensor(init.shape());
  e.value = std::move(init);
  entries_.push_back(std::move(e));
  index_[name] = entries_.size() - 1;
  return entries_.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("ParamStore: unknown parameter " + name);
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.grad.fill(0.0);
}

void ParamStore::write(std::ostream& os) const {
  io::write_u64(os, entries_.size());
  io::write_u64(os, step_);
  for (const auto& e : entries_) {
    io::write_string(os, e.name);
    io::write_tensor(os, e.value);
    io::write_tensor(os, e.m);
    io::write_tensor(os, e.v);
  }
}

ParamStore ParamStore::read(std::istream& is) {
  ParamStore out;
  const std::uint64_t n = io::read_u64(is);
  out.step_ = io::read_u64(is);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::string name = io::read_string(is);
    Tensor value = io::read_tensor(is);
    Tensor m = io::read_tensor(is);
    Tensor v = io::read_tensor(is);
    if (!m.same_shape(value) || !v.same_shape(value)) {
      throw IntegrityError("ParamStore: moment buffer shape mismatch for " + name);
    }
    const std::size_t idx = out.add(name, std::move(value));
    out.entries_[idx].m = std::move(m);
    out.entries_[idx].v = std::move(v);
  }
  return out;
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (step_ != other.step_ || entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || !(a.value == b.value) || !(a.m == b.m) || !(a.v == b.v)) {
      return false;
    }
  }
  return true;
}

void adam_step(ParamStore& params, const AdamConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw ConfigError("adam_step: learning rate must be positive");
  params.set_step(params.step() + 1);
  const double t = static_cast<double>(params.step());
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  const double a1 = 1.0 - cfg.beta1;
  const double a2 = 1.0 - cfg.beta2;
  const double step = cfg.lr / c1;
  const double inv_sqrt_c2 = 1.0 / std::sqrt(c2);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& e = params.entry(p);
    const auto n = static_cast<Eigen::Index>(e.value.size());
    Eigen::Map<Eigen::ArrayXd> x(e.value.data(), n);
    Eigen::Map<Eigen::ArrayXd> m(e.m.data(), n);
    Eigen::Map<Eigen::ArrayXd> v(e.v.data(), n);
    Eigen::Map<const Eigen::ArrayXd> g(e.grad.data(), n);
    m = cfg.beta1 * m + a1 * g;
    v = cfg.beta2 * v + a2 * g.square();
    x -= step * m / (v.sqrt() * inv_sqrt_c2 + cfg.eps);
    if (!x.allFinite()) {
      throw NumericError("adam_step: non-finite value in parameter " + e.name);
    }
  }
}

}  // namespace evae
