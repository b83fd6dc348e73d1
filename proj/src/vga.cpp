#include "evae/vga.hpp"

#include <algorithm>
#include <cmath>

#include "evae/errors.hpp"

namespace evae::vga {

std::string to_string(GateOrder g) {
  return g == GateOrder::crossover_first ? "crossover-first" : "swapped";
}
std::string to_string(SelectionMode m) { return m == SelectionMode::greedy ? "greedy" : "softmax"; }
std::string to_string(Rescore r) { return r == Rescore::all ? "all" : "none"; }

GateOrder gate_order_from_string(const std::string& s) {
  if (s == "crossover-first") return GateOrder::crossover_first;
  if (s == "swapped") return GateOrder::swapped;
  throw ConfigError("unknown gate order '" + s + "' (expected crossover-first or swapped)");
}

SelectionMode selection_mode_from_string(const std::string& s) {
  if (s == "greedy") return SelectionMode::greedy;
  if (s == "softmax") return SelectionMode::softmax;
  throw ConfigError("unknown selection mode '" + s + "' (expected greedy or softmax)");
}

Rescore rescore_from_string(const std::string& s) {
  if (s == "all") return Rescore::all;
  if (s == "none") return Rescore::none;
  throw ConfigError("unknown rescore policy '" + s + "' (expected all or none)");
}

std::string to_string(ActionKind k) {
  switch (k) {
    case ActionKind::crossover: return "crossover";
    case ActionKind::mutation: return "mutation";
    case ActionKind::select_and_train: return "select";
  }
  return "?";
}

void VgaConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("VgaConfig: " + msg); };
  if (!(pr_m >= 0.0 && pr_m <= 1.0)) fail("pr_m must lie in [0, 1]");
  if (!(pr_c >= 0.0 && pr_c <= 1.0)) fail("pr_c must lie in [0, 1]");
  if (!(eta > 0.0)) fail("eta must be positive");
  if (population < 2) fail("population must be at least 2");
  if (!(set_point > 0.0)) fail("set point c must be positive");
  if (!(beta_min > 0.0 && beta_min < beta_max)) fail("need 0 < beta_min < beta_max");
  if (!(tau > 0.0)) fail("tau must be positive");
  if (trial_window < 1) fail("trial_window must be >= 1");
  if (!(mutation_scale >= 0.0)) fail("mutation_scale must be >= 0");
  if (!(init_low > 0.0 && init_low <= init_high)) fail("need 0 < init_low <= init_high");
  if (pr_m > pr_c) fail("pr_m > pr_c leaves the second gate unreachable");
}

void Population::refresh_best() {
  best_fitness = std::numeric_limits<double>::quiet_NaN();
  for (const auto& m : members) {
    if (m.evaluated() && !(m.fitness >= best_fitness)) {
      best_fitness = m.fitness;
      best_beta = m.beta;
    }
  }
}

std::size_t Population::worst_index() const {
  std::size_t worst = 0;
  for (std::size_t i = 1; i < members.size(); ++i) {
    // Unevaluated members count as worst of all.
    if (!members[worst].evaluated()) break;
    if (!members[i].evaluated() || members[i].fitness > members[worst].fitness) worst = i;
  }
  return worst;
}

double sample_rc(double u, double eta) {
  if (!(u >= 0.0 && u < 1.0)) throw UsageError("sample_rc: u must lie in [0, 1)");
  if (!(eta > 0.0)) throw UsageError("sample_rc: eta must be positive");
  const double e = 1.0 / (eta + 1.0);
  return u <= 0.5 ? std::pow(2.0 * u, e) : std::pow(1.0 / (2.0 * (1.0 - u)), e);
}

std::pair<double, double> crossover(double parent_prev, double parent_cur, double r_c) {
  const double a = 0.5 * ((1.0 + r_c) * parent_cur + (1.0 - r_c) * parent_prev);
  const double b = 0.5 * ((1.0 - r_c) * parent_cur + (1.0 + r_c) * parent_prev);
  return {a, b};
}

double clamp_beta(double beta, const VgaConfig& cfg) {
  if (std::isnan(beta)) return cfg.beta_min;
  return std::clamp(beta, cfg.beta_min, cfg.beta_max);
}

double mutate_with(double beta, double r_m, double scale, const VgaConfig& cfg) {
  return clamp_beta(beta + scale * r_m, cfg);
}

std::pair<double, double> mutate(double beta, Rng& rng, double scale, const VgaConfig& cfg) {
  const double r_m = rng.cauchy();
  return {mutate_with(beta, r_m, scale, cfg), r_m};
}

double fitness(double elbo_next, double elbo_cur, double kl_next, const VgaConfig& cfg) {
  const double f = (elbo_next - elbo_cur) + std::abs(kl_next - cfg.set_point);
  return cfg.negate_fitness ? -f : f;
}

std::vector<double> softmax_probabilities(const std::vector<Chromosome>& members, double tau) {
  if (members.empty()) throw UsageError("softmax_probabilities: empty population");
  if (!(tau > 0.0)) throw UsageError("softmax_probabilities: tau must be positive");
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& m : members) {
    if (!m.evaluated()) throw UsageError("softmax selection over an unevaluated member");
    lowest = std::min(lowest, m.fitness);
  }
  std::vector<double> p(members.size());
  double z = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    p[i] = std::exp(-(members[i].fitness - lowest) / tau);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

std::size_t select(const Population& pop, double tau, Rng& rng, SelectionMode mode) {
  const auto& ms = pop.members;
  if (ms.empty()) throw UsageError("select: empty population");
  if (mode == SelectionMode::greedy) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (!ms[i].evaluated()) throw UsageError("greedy select over an unevaluated member");
      if (ms[i].fitness < ms[best].fitness) best = i;
    }
    return best;
  }
  const auto p = softmax_probabilities(ms, tau);
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;
}

EvolveAction evolve_step(const Population& pop, double u, const VgaConfig& cfg, Rng& rng) {
  if (!(u >= 0.0 && u < 1.0)) throw UsageError("evolve_step: u must lie in [0, 1)");
  if (cfg.pr_m > cfg.pr_c) {
    throw ConfigError("evolve_step: pr_m > pr_c leaves the second gate unreachable");
  }
  if (pop.members.empty()) throw UsageError("evolve_step: empty population");

  ActionKind kind = ActionKind::select_and_train;
  if (u < cfg.pr_m) {
    kind = cfg.gate_order == GateOrder::crossover_first ? ActionKind::crossover
                                                      : ActionKind::mutation;
  } else if (u < cfg.pr_c) {
    kind = cfg.gate_order == GateOrder::crossover_first ? ActionKind::mutation
                                                      : ActionKind::crossover;
  }

  EvolveAction act;
  act.kind = kind;
  switch (kind) {
    case ActionKind::crossover: {
      // Second parent: a uniformly drawn member of the candidate group.
      act.selected_index = rng.index(pop.members.size());
      act.parent_prev = pop.previous_beta;
      act.parent_cur = pop.members[act.selected_index].beta;
      act.draw = sample_rc(rng.uniform(), cfg.eta);
      auto [a, b] = crossover(act.parent_prev, act.parent_cur, act.draw);
      act.candidates = {clamp_beta(a, cfg), clamp_beta(b, cfg)};
      break;
    }
    case ActionKind::mutation: {
      act.parent_prev = pop.previous_beta;
      act.parent_cur = pop.previous_beta;
      auto [beta, r_m] = mutate(pop.previous_beta, rng, cfg.mutation_scale, cfg);
      act.draw = r_m;
      act.candidates = {beta};
      break;
    }
    case ActionKind::select_and_train: {
      act.selected_index = select(pop, cfg.tau, rng, cfg.selection);
      act.candidates = {pop.members[act.selected_index].beta};
      break;
    }
  }
  return act;
}

VgaDriver::VgaDriver(VgaConfig cfg, Rng rng) : cfg_(std::move(cfg)), rng_(std::move(rng)) {
  cfg_.validate();
}

double VgaDriver::score(const Evaluator& eval, double beta, std::size_t slot) {
  const TrialOutcome o = eval(beta, slot);
  ++evaluations_;
  const double f = fitness(o.elbo_next, o.elbo_cur, o.kl_next, cfg_);
  if (!std::isfinite(f)) throw NumericError("VGA: non-finite fitness for beta " + std::to_string(beta));
  return f;
}

void VgaDriver::apply(std::size_t index) {
  const auto& m = pop_.members.at(index);
  applied_beta_ = m.beta;
  applied_fitness_ = m.fitness;
  pop_.previous_beta = m.beta;
}

std::vector<EventRecord> VgaDriver::initialize(const Evaluator& eval, std::uint64_t iteration) {
  pop_ = Population{};
  const double lo = std::log(cfg_.init_low);
  const double hi = std::log(cfg_.init_high);
  std::vector<EventRecord> log;
  for (std::size_t i = 0; i < cfg_.population; ++i) {
    Chromosome c;
    c.beta = clamp_beta(std::exp(rng_.uniform(lo, hi)), cfg_);
    pop_.members.push_back(c);
  }
  for (std::size_t i = 0; i < pop_.members.size(); ++i) {
    auto& c = pop_.members[i];
    c.fitness = score(eval, c.beta, i);
    log.push_back({iteration, "init", {}, {}, {}, c.beta, c.fitness, true});
  }
  pop_.refresh_best();
  apply(select(pop_, cfg_.tau, rng_, cfg_.selection));
  initialized_ = true;
  return log;
}

std::vector<EventRecord> VgaDriver::step(const Evaluator& eval, std::uint64_t iteration) {
  return step_with(rng_.uniform(), eval, iteration);
}

std::vector<EventRecord> VgaDriver::step_with(double u, const Evaluator& eval,
                                              std::uint64_t iteration) {
  if (!initialized_) throw UsageError("VgaDriver::step before initialize");
  EvolveAction act = evolve_step(pop_, u, cfg_, rng_);
  std::vector<EventRecord> log;

  if (act.kind == ActionKind::select_and_train) {
    const double before = applied_beta_;
    apply(act.selected_index);
    if (applied_beta_ != before) {
      log.push_back({iteration, "select", {}, {}, {}, applied_beta_, applied_fitness_, true});
    }
    return log;
  }

  ++generations_;
  for (auto& m : pop_.members) ++m.age;

  std::size_t slot = 0;
  if (cfg_.rescore == Rescore::all) {
    for (auto& m : pop_.members) m.fitness = score(eval, m.beta, slot++);
  }

  // Keep the better SBX child; a mutant is the only child.
  std::vector<double> scores;
  for (double beta : act.candidates) scores.push_back(score(eval, beta, slot++));
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] < scores[best]) best = i;
  }

  Chromosome child{act.candidates[best], scores[best], 0};
  const std::size_t worst = pop_.worst_index();
  const bool accepted = child.fitness < pop_.members[worst].fitness;
  if (accepted) pop_.members[worst] = child;

  const std::string name = to_string(act.kind);
  for (std::size_t i = 0; i < act.candidates.size(); ++i) {
    log.push_back({iteration, name, act.parent_prev, act.parent_cur, act.draw,
                   act.candidates[i], scores[i], accepted && i == best});
  }

  pop_.refresh_best();
  // The incumbent's stored fitness may have moved after re-scoring.
  for (const auto& m : pop_.members) {
    if (m.beta == applied_beta_) {
      applied_fitness_ = m.fitness;
      break;
    }
  }
  return log;
}

}  // namespace evae::vga
