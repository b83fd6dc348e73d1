#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "evae/checkpoint.hpp"
#include "evae/param_store.hpp"
#include "evae/schedulers.hpp"
#include "evae/sprites.hpp"
#include "evae/vae.hpp"
#include "evae/vga.hpp"

namespace evae {

enum class ControllerKind { vga, schedule };

struct TrainerConfig {
  std::uint64_t iterations = 20000;    // T, inner steps
  std::uint64_t outer_interval = 10;   // E, inner steps between gate draws
  std::size_t batch_size = 64;
  std::uint64_t log_interval = 1;
  bool shuffle = true;
  AdamConfig adam;
  ControllerKind controller = ControllerKind::vga;
  vga::VgaConfig vga;
  sched::ScheduleState schedule = sched::ScheduleState::make_constant(1.0);
  /// Number of leading trial batches concatenated into the probe on which
  /// the ELBO and KL entering the fitness are measured.
  std::size_t probe_batches = 4;
  /// Continue from the accepted candidate's trial weights instead of the
  /// pre-trial checkpoint (ablation).
  bool keep_winner_weights = false;
  /// Hash the main state around every evaluation event.
  bool verify_isolation = false;
  std::uint64_t seed = 1;

  void validate() const;
};

struct MetricsRow {
  std::uint64_t iteration = 0;
  double beta = 0.0;
  double recon = 0.0;  // D
  double rate = 0.0;   // R
  double total = 0.0;
  std::vector<double> kl_per_dim;
  double fitness = 0.0;  // NaN when the controller is a schedule
  double wall_seconds = 0.0;
};

struct ScheduleTraceRow {
  std::uint64_t iteration = 0;
  double beta = 0.0;
  double kl_observed = 0.0;
  double error = 0.0;  // NaN unless PID
};

struct IsolationCheck {
  std::uint64_t iteration = 0;
  std::uint64_t hash_before = 0;
  std::uint64_t hash_after = 0;
};

struct RunResult {
  std::vector<MetricsRow> metrics;
  std::vector<vga::EventRecord> events;
  std::vector<ScheduleTraceRow> schedule_trace;
  std::vector<IsolationCheck> isolation;
  std::size_t candidate_evaluations = 0;
  TrainState final_state;
};

/// One Adam update on recon + beta * KL for the batch.
ElboReport inner_step(VaeModel& model, const Tensor& batch, double beta, Rng& rng,
                      const AdamConfig& adam);

/// Batches and probe shared by every candidate scored at one outer event.
struct TrialContext {
  std::vector<Tensor> batches;  // W recorded batches
  Tensor probe;
  std::uint64_t probe_seed = 0;
  AdamConfig adam;
};

/// The trial data stream the main run would consume next, without consuming it.
TrialContext make_trial_context(const TrainState& state, const data::Dataset& dataset,
                                std::size_t window, std::size_t probe_batches,
                                const AdamConfig& adam, std::uint64_t probe_seed);

/// D + R of `model` on the probe with the context's fixed noise.
ElboReport probe_elbo(const VaeModel& model, const TrialContext& ctx);

struct CandidateResult {
  double fitness = 0.0;
  double kl_end = 0.0;
  double elbo_end = 0.0;
  double elbo_start = 0.0;
  /// Trained state after the window, for keep-winner-weights.
  std::optional<TrainState> end_state;
};

/// Restores the checkpoint, trains ctx.batches.size() steps at
/// `candidate_beta`, and scores the result against the checkpoint's probe
/// ELBO. The checkpoint itself is never modified.
CandidateResult evaluate_candidate(const Checkpoint& checkpoint, double candidate_beta,
                                   const TrialContext& ctx, Rng rng,
                                   const vga::VgaConfig& vga_cfg, bool keep_state = false);

using ProgressFn = std::function<void(const MetricsRow&)>;

/// Inner-outer joint training loop over `dataset`.
RunResult run_experiment(const TrainerConfig& cfg, const VaeArchitecture& arch,
                         const data::Dataset& dataset, const ProgressFn& progress = {});

}  // namespace evae
