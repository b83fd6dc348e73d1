#include <doctest.h>

#include <cmath>

#include "evae/errors.hpp"
#include "evae/schedulers.hpp"

using namespace evae;
using namespace evae::sched;

namespace {

double at(ScheduleState s, std::uint64_t t) {
  s.t = t;
  return current_beta(s);
}

}  // namespace

TEST_CASE("constant schedule") {
  auto s = ScheduleState::make_constant(4.0);
  for (int i = 0; i < 100; ++i) {
    CHECK(current_beta(s) == 4.0);
    tick(s);
  }
  CHECK(s.t == 100);
  CHECK_THROWS_AS(ScheduleState::make_constant(-1.0), ConfigError);
}

TEST_CASE("cost annealing is a logistic over the horizon") {
  auto s = ScheduleState::make_cost(10000.0);
  CHECK(at(s, 0) <= 0.01);
  CHECK(at(s, 0) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(at(s, 5000) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(at(s, 10000) >= 0.99);
  CHECK(at(s, 10000) == doctest::Approx(0.99).epsilon(1e-12));
  double prev = -1;
  for (std::uint64_t t = 0; t <= 12000; t += 250) {
    CHECK(at(s, t) > prev);
    prev = at(s, t);
  }
  auto scaled = ScheduleState::make_cost(200.0, 4.0);
  CHECK(at(scaled, 100) == doctest::Approx(2.0));
  CHECK_THROWS_AS(ScheduleState::make_cost(0.0), ConfigError);
}

TEST_CASE("cyclical schedule ramps then holds") {
  auto s = ScheduleState::make_cyclical(8000.0, 8, 0.5);
  for (std::uint64_t c = 0; c < 8; ++c) {
    const std::uint64_t start = c * 1000;
    CHECK(at(s, start) == 0.0);
    CHECK(at(s, start + 250) == doctest::Approx(0.5));
    CHECK(at(s, start + 500) == 1.0);
    CHECK(at(s, start + 999) == 1.0);
  }
  CHECK(at(s, 8000) == 1.0);
  CHECK(at(s, 20000) == 1.0);
  CHECK_THROWS_AS(ScheduleState::make_cyclical(100.0, 0), ConfigError);
  CHECK_THROWS_AS(ScheduleState::make_cyclical(100.0, 2, 0.0), ConfigError);
}

TEST_CASE("pid with zero gains is constant") {
  PidParams p;
  p.kp = p.ki = p.kd = 0.0;
  p.beta_init = 2.5;
  auto s = ScheduleState::make_pid(p);
  for (double kl : {0.0, 3.0, 50.0, 1e-3, 7.0}) CHECK(pid_step(s, kl) == 2.5);
  CHECK(s.t == 5);
}

TEST_CASE("pid raises beta when kl exceeds the set point and lowers it otherwise") {
  PidParams p;
  p.kp = 0.1;
  p.ki = 0.0;
  p.set_point = 3.0;
  p.beta_init = 1.0;
  auto s = ScheduleState::make_pid(p);
  CHECK(pid_step(s, 8.0) == doctest::Approx(1.5));
  CHECK(s.last_error == doctest::Approx(-5.0));
  CHECK(pid_step(s, 1.0) == doctest::Approx(0.8));
  CHECK(pid_step(s, 100.0) == doctest::Approx(10.7));
}

TEST_CASE("pid output is clamped and the integral does not wind up") {
  PidParams p;
  p.kp = 0.0;
  p.ki = 0.1;
  p.set_point = 3.0;
  p.beta_init = 1.0;
  p.beta_max = 5.0;
  auto s = ScheduleState::make_pid(p);
  // KL far below the set point drives beta to the floor.
  for (int i = 0; i < 100; ++i) CHECK(pid_step(s, 0.0) >= 0.0);
  CHECK(s.last_beta == 0.0);
  const double frozen = s.integral;
  CHECK(frozen <= 10.0);
  // Once the error reverses, the output leaves the floor immediately.
  pid_step(s, 10.0);
  pid_step(s, 10.0);
  CHECK(s.last_beta > 0.0);
  for (int i = 0; i < 1000; ++i) CHECK(pid_step(s, 1000.0) <= 5.0);
  CHECK_THROWS_AS(pid_step(s, std::nan("")), NumericError);
}

TEST_CASE("kind names") {
  for (auto k : {Kind::constant, Kind::cost, Kind::cyclical, Kind::pid}) {
    CHECK(kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(kind_from_string("linear"), ConfigError);
}
