#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "evae/rng.hpp"

namespace evae::vga {

enum class GateOrder {
  crossover_first,  // u < pr_m -> crossover, pr_m <= u < pr_c -> mutation
  swapped,        // u < pr_m -> mutation,  pr_m <= u < pr_c -> crossover
};
enum class SelectionMode { greedy, softmax };
/// Which members get re-scored against the current state at each generation.
enum class Rescore { all, none };

std::string to_string(GateOrder g);
std::string to_string(SelectionMode m);
std::string to_string(Rescore r);
GateOrder gate_order_from_string(const std::string& s);
SelectionMode selection_mode_from_string(const std::string& s);
Rescore rescore_from_string(const std::string& s);

struct VgaConfig {
  double pr_m = 0.001;
  double pr_c = 0.04;
  double eta = 2.0;
  std::size_t population = 20;
  double set_point = 10.0;  // c, nats
  double beta_min = 1e-4;
  double beta_max = 100.0;
  double tau = 1.0;
  std::size_t trial_window = 50;
  GateOrder gate_order = GateOrder::crossover_first;
  SelectionMode selection = SelectionMode::greedy;
  Rescore rescore = Rescore::all;
  double mutation_scale = 1.0;
  double init_low = 0.1;
  double init_high = 10.0;
  /// Flip the fitness sign (larger is fitter); ablation only.
  bool negate_fitness = false;

  /// Throws ConfigError on out-of-range fields.
  void validate() const;
};

struct Chromosome {
  double beta = 1.0;
  double fitness = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t age = 0;

  bool evaluated() const { return fitness == fitness; }
};

struct Population {
  std::vector<Chromosome> members;
  double best_beta = 1.0;
  double best_fitness = std::numeric_limits<double>::quiet_NaN();
  /// beta most recently used for actual training
  double previous_beta = 1.0;

  /// Recomputes best_beta / best_fitness as the minimum over evaluated members.
  void refresh_best();
  std::size_t worst_index() const;
};

/// SBX spread factor from a uniform draw (inverse CDF of the SBX density).
double sample_rc(double u, double eta);

/// Both SBX children before clamping:
///   a = ((1 + r) cur + (1 - r) prev) / 2,  b = ((1 - r) cur + (1 + r) prev) / 2.
std::pair<double, double> crossover(double parent_prev, double parent_cur, double r_c);

double clamp_beta(double beta, const VgaConfig& cfg);

/// clamp(beta + scale * r_m) for a given Cauchy draw.
double mutate_with(double beta, double r_m, double scale, const VgaConfig& cfg);
/// Draws r_m ~ Cauchy(0, 1) from rng; returns {new beta, r_m}.
std::pair<double, double> mutate(double beta, Rng& rng, double scale, const VgaConfig& cfg);

/// (elbo_next - elbo_cur) + |kl_next - c|; lower is fitter.
double fitness(double elbo_next, double elbo_cur, double kl_next, const VgaConfig& cfg);

/// Selection probabilities proportional to exp(-f / tau), computed stably.
std::vector<double> softmax_probabilities(const std::vector<Chromosome>& members, double tau);

/// Index of the selected member: argmin (lowest index wins ties) or a softmax draw.
std::size_t select(const Population& pop, double tau, Rng& rng, SelectionMode mode);

enum class ActionKind { crossover, mutation, select_and_train };
std::string to_string(ActionKind k);

struct EvolveAction {
  ActionKind kind = ActionKind::select_and_train;
  /// Candidate betas (two SBX children, one mutant) or {beta*} for selection.
  std::vector<double> candidates;
  double parent_prev = 0.0;
  double parent_cur = 0.0;
  /// r_c for crossover, r_m for mutation, NaN for selection.
  double draw = std::numeric_limits<double>::quiet_NaN();
  std::size_t selected_index = 0;
};

/// Routes one gate draw u in [0, 1) to crossover, mutation or selection and
/// produces the corresponding candidates.
EvolveAction evolve_step(const Population& pop, double u, const VgaConfig& cfg, Rng& rng);

/// Fitness ingredients measured for one candidate beta at the current state.
struct TrialOutcome {
  double elbo_next = 0.0;
  double elbo_cur = 0.0;
  double kl_next = 0.0;
};

using Evaluator = std::function<TrialOutcome(double beta, std::size_t slot)>;

/// One row of the VGA event log.
struct EventRecord {
  std::uint64_t iteration = 0;
  std::string action;
  double parent_prev = std::numeric_limits<double>::quiet_NaN();
  double parent_cur = std::numeric_limits<double>::quiet_NaN();
  double draw = std::numeric_limits<double>::quiet_NaN();
  double candidate_beta = 0.0;
  double fitness = std::numeric_limits<double>::quiet_NaN();
  bool accepted = false;
};

/// Outer loop state: population, gate draws, evaluations and replacement.
///
/// The driver is agnostic of what is being trained: candidate betas are
/// scored through an Evaluator supplied per event, which for the VAE trainer
/// runs a trial from a checkpoint and for tests can be an analytic plant.
class VgaDriver {
 public:
  VgaDriver(VgaConfig cfg, Rng rng);

  const VgaConfig& config() const { return cfg_; }
  const Population& population() const { return pop_; }
  bool initialized() const { return initialized_; }
  double applied_beta() const { return applied_beta_; }
  double applied_fitness() const { return applied_fitness_; }
  std::size_t evaluations() const { return evaluations_; }
  std::size_t generations() const { return generations_; }

  /// Draws L log-uniform betas in [init_low, init_high], scores all of them
  /// and applies the fittest.
  std::vector<EventRecord> initialize(const Evaluator& eval, std::uint64_t iteration);

  /// Draws a gate value and runs one evolve_step. Evaluates candidates (and
  /// re-scores the population when configured) only on crossover/mutation.
  std::vector<EventRecord> step(const Evaluator& eval, std::uint64_t iteration);

  /// Same as step() with an explicit gate value.
  std::vector<EventRecord> step_with(double u, const Evaluator& eval, std::uint64_t iteration);

 private:
  double score(const Evaluator& eval, double beta, std::size_t slot);
  void apply(std::size_t index);

  VgaConfig cfg_;
  Rng rng_;
  Population pop_;
  bool initialized_ = false;
  double applied_beta_ = 1.0;
  double applied_fitness_ = std::numeric_limits<double>::quiet_NaN();
  std::size_t evaluations_ = 0;
  std::size_t generations_ = 0;
};

}  // namespace evae::vga
