#include "evae/schedulers.hpp"

#include <algorithm>
#include <cmath>

#include "evae/errors.hpp"

namespace evae::sched {

std::string to_string(Kind k) {
  switch (k) {
    case Kind::constant: return "constant";
    case Kind::cost: return "cost";
    case Kind::cyclical: return "cyclical";
    case Kind::pid: return "pid";
  }
  return "?";
}

Kind kind_from_string(const std::string& s) {
  if (s == "constant") return Kind::constant;
  if (s == "cost") return Kind::cost;
  if (s == "cyclical") return Kind::cyclical;
  if (s == "pid") return Kind::pid;
  throw ConfigError("unknown schedule '" + s + "'");
}

ScheduleState ScheduleState::make_constant(double beta) {
  ScheduleState s;
  s.kind = Kind::constant;
  s.constant.beta = beta;
  s.validate();
  return s;
}

ScheduleState ScheduleState::make_cost(double horizon, double beta_max) {
  ScheduleState s;
  s.kind = Kind::cost;
  s.cost.horizon = horizon;
  s.cost.beta_max = beta_max;
  s.validate();
  return s;
}

ScheduleState ScheduleState::make_cyclical(double horizon, std::size_t cycles, double ramp,
                                           double beta_max) {
  ScheduleState s;
  s.kind = Kind::cyclical;
  s.cyclical = {horizon, cycles, ramp, beta_max};
  s.validate();
  return s;
}

ScheduleState ScheduleState::make_pid(const PidParams& p) {
  ScheduleState s;
  s.kind = Kind::pid;
  s.pid = p;
  s.last_beta = std::clamp(p.beta_init, 0.0, p.beta_max);
  s.validate();
  return s;
}

void ScheduleState::validate() const {
  switch (kind) {
    case Kind::constant:
      if (!(constant.beta >= 0.0)) throw ConfigError("constant schedule: beta must be >= 0");
      break;
    case Kind::cost:
      if (!(cost.horizon > 0.0)) throw ConfigError("cost schedule: horizon must be positive");
      if (!(cost.beta_max >= 0.0)) throw ConfigError("cost schedule: beta_max must be >= 0");
      break;
    case Kind::cyclical:
      if (!(cyclical.horizon > 0.0)) throw ConfigError("cyclical schedule: horizon must be positive");
      if (cyclical.cycles < 1) throw ConfigError("cyclical schedule: need at least one cycle");
      if (!(cyclical.ramp > 0.0 && cyclical.ramp <= 1.0)) {
        throw ConfigError("cyclical schedule: ramp fraction must lie in (0, 1]");
      }
      if (!(cyclical.beta_max >= 0.0)) throw ConfigError("cyclical schedule: beta_max must be >= 0");
      break;
    case Kind::pid:
      if (!(pid.beta_max > 0.0)) throw ConfigError("pid schedule: beta_max must be positive");
      if (!(pid.set_point > 0.0)) throw ConfigError("pid schedule: set point must be positive");
      break;
  }
}

double constant_beta(const ScheduleState& s) { return s.constant.beta; }

double cost_anneal_beta(const ScheduleState& s) {
  const double T = s.cost.horizon;
  const double k = s.cost.slope > 0.0 ? s.cost.slope : 2.0 * std::log(99.0) / T;
  const double x = k * (static_cast<double>(s.t) - 0.5 * T);
  const double w = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  return s.cost.beta_max * w;
}

double cyclical_beta(const ScheduleState& s) {
  const auto& p = s.cyclical;
  const double period = p.horizon / static_cast<double>(p.cycles);
  const double t = static_cast<double>(s.t);
  // Past the horizon the last cycle's plateau holds.
  if (t >= p.horizon) return p.beta_max;
  const double phase = std::fmod(t, period) / period;
  return p.beta_max * std::min(1.0, phase / p.ramp);
}

double pid_step(ScheduleState& s, double kl_observed) {
  if (!std::isfinite(kl_observed)) throw NumericError("pid_step: non-finite KL observation");
  const auto& p = s.pid;
  const double e = p.set_point - kl_observed;
  const double derivative = s.has_prev_error ? e - s.prev_error : 0.0;
  // KL below the set point (e > 0) must lower beta, hence the negative sign.
  const double candidate_integral = s.integral + e;
  const double raw = p.beta_init - (p.kp * e + p.ki * candidate_integral + p.kd * derivative);
  const double out = std::clamp(raw, 0.0, p.beta_max);
  // Anti-windup: freeze the integral while saturated and pushing further out.
  const bool saturated = raw != out;
  if (!saturated) s.integral = candidate_integral;
  s.prev_error = e;
  s.has_prev_error = true;
  s.last_error = e;
  s.last_beta = out;
  ++s.t;
  return out;
}

double current_beta(const ScheduleState& s) {
  switch (s.kind) {
    case Kind::constant: return constant_beta(s);
    case Kind::cost: return cost_anneal_beta(s);
    case Kind::cyclical: return cyclical_beta(s);
    case Kind::pid: return s.last_beta;
  }
  return 0.0;
}

void tick(ScheduleState& s) {
  if (s.kind != Kind::pid) ++s.t;
}

}  // namespace evae::sched
