#pragma once

#include <cstdint>
#include <string>

namespace evae::sched {

enum class Kind { constant, cost, cyclical, pid };

std::string to_string(Kind k);
Kind kind_from_string(const std::string& s);

struct ConstantParams {
  double beta = 1.0;
};

/// Sigmoid warm-up from ~0 to ~1 over `horizon` iterations, scaled by beta_max.
struct CostParams {
  double horizon = 10000.0;
  /// Logistic slope; <= 0 selects 2 ln(99) / horizon so w(0) = 0.01, w(T) = 0.99.
  double slope = 0.0;
  double beta_max = 1.0;
};

/// `cycles` linear ramps over `horizon` iterations; each ramp rises over the
/// first `ramp` fraction of its cycle and then holds at beta_max.
struct CyclicalParams {
  double horizon = 10000.0;
  std::size_t cycles = 8;
  double ramp = 0.5;
  double beta_max = 1.0;
};

/// Positional PI(D) controller on e = c - KL.
struct PidParams {
  double kp = 0.01;
  double ki = 0.0001;
  double kd = 0.0;
  double set_point = 3.0;
  double beta_init = 1.0;
  double beta_max = 100.0;
};

/// State of one beta schedule. Only the fields for `kind` are used.
struct ScheduleState {
  Kind kind = Kind::constant;
  std::uint64_t t = 0;
  ConstantParams constant;
  CostParams cost;
  CyclicalParams cyclical;
  PidParams pid;
  // PID memory
  double integral = 0.0;
  double prev_error = 0.0;
  bool has_prev_error = false;
  double last_beta = 1.0;
  double last_error = 0.0;

  static ScheduleState make_constant(double beta);
  static ScheduleState make_cost(double horizon, double beta_max = 1.0);
  static ScheduleState make_cyclical(double horizon, std::size_t cycles, double ramp = 0.5,
                                     double beta_max = 1.0);
  static ScheduleState make_pid(const PidParams& p);

  void validate() const;
};

double constant_beta(const ScheduleState& s);
/// Weight at iteration s.t for the cost-annealing schedule.
double cost_anneal_beta(const ScheduleState& s);
double cyclical_beta(const ScheduleState& s);
/// Feeds one KL observation and returns the new beta; advances s.t.
double pid_step(ScheduleState& s, double kl_observed);

/// Beta to apply at the current t for the time-driven kinds (constant, cost,
/// cyclical); for PID returns the last emitted value.
double current_beta(const ScheduleState& s);

/// Advances t by one for time-driven kinds. PID advances inside pid_step.
void tick(ScheduleState& s);

}  // namespace evae::sched
