#include "evae/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "evae/errors.hpp"
#include "evae/graph.hpp"
#include "evae/log.hpp"

namespace evae {
namespace {

// Stream tags for Rng::fork; fixed so runs are reproducible from the seed.
constexpr std::uint64_t kModelStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kDataStream = 3;
constexpr std::uint64_t kVgaStream = 4;
constexpr std::uint64_t kTrialStream = 5;

}  // namespace

void TrainerConfig::validate() const {
  if (outer_interval < 1) throw ConfigError("trainer: outer interval E must be >= 1");
  if (iterations < outer_interval) throw ConfigError("trainer: need iterations T >= E");
  if (batch_size < 1) throw ConfigError("trainer: batch_size must be >= 1");
  if (log_interval < 1) throw ConfigError("trainer: log_interval must be >= 1");
  if (probe_batches < 1) throw ConfigError("trainer: probe_batches must be >= 1");
  if (!(adam.lr > 0.0)) throw ConfigError("trainer: learning rate must be positive");
  if (controller == ControllerKind::vga) {
    vga.validate();
  } else {
    schedule.validate();
  }
}

ElboReport inner_step(VaeModel& model, const Tensor& batch, double beta, Rng& rng,
                      const AdamConfig& adam) {
  if (!(beta >= 0.0)) throw ConfigError("inner_step: beta must be >= 0");
  model.params().zero_grad();
  Graph g(&model.params());
  auto terms = elbo_loss(g, model, batch, beta, rng);
  if (!std::isfinite(terms.report.total_loss)) {
    throw NumericError("inner_step: non-finite loss at beta " + std::to_string(beta));
  }
  g.backward(terms.loss);
  adam_step(model.params(), adam);
  return terms.report;
}

TrialContext make_trial_context(const TrainState& state, const data::Dataset& dataset,
                                std::size_t window, std::size_t probe_batches,
                                const AdamConfig& adam, std::uint64_t probe_seed) {
  TrialContext ctx;
  ctx.adam = adam;
  ctx.probe_seed = probe_seed;
  data::BatchIterator it = state.batches;
  std::vector<std::size_t> probe_idx;
  for (std::size_t i = 0; i < window; ++i) {
    auto idx = it.next();
    if (i < probe_batches) probe_idx.insert(probe_idx.end(), idx.begin(), idx.end());
    ctx.batches.push_back(dataset.gather(idx));
  }
  ctx.probe = dataset.gather(probe_idx);
  return ctx;
}

ElboReport probe_elbo(const VaeModel& model, const TrialContext& ctx) {
  Rng noise(ctx.probe_seed);
  return evaluate_elbo(model, ctx.probe, 1.0, noise);
}

CandidateResult evaluate_candidate(const Checkpoint& checkpoint, double candidate_beta,
                                   const TrialContext& ctx, Rng rng,
                                   const vga::VgaConfig& vga_cfg, bool keep_state) {
  if (ctx.batches.empty()) throw UsageError("evaluate_candidate: trial window is empty");
  TrainState trial = restore_checkpoint(checkpoint);
  CandidateResult r;
  r.elbo_start = probe_elbo(trial.model, ctx).neg_elbo();
  for (const auto& batch : ctx.batches) {
    inner_step(trial.model, batch, candidate_beta, rng, ctx.adam);
  }
  const ElboReport end = probe_elbo(trial.model, ctx);
  r.elbo_end = end.neg_elbo();
  r.kl_end = end.kl_total;
  r.fitness = vga::fitness(r.elbo_end, r.elbo_start, r.kl_end, vga_cfg);
  if (keep_state) {
    trial.rng = rng;
    trial.iteration += ctx.batches.size();
    r.end_state = std::move(trial);
  }
  return r;
}

RunResult run_experiment(const TrainerConfig& cfg, const VaeArchitecture& arch,
                         const data::Dataset& dataset, const ProgressFn& progress) {
  cfg.validate();
  if (dataset.pixel_count() != arch.input_dim) {
    throw ConfigError("trainer: dataset has " + std::to_string(dataset.pixel_count()) +
                      " pixels per image, model expects " + std::to_string(arch.input_dim));
  }
  const Rng root(cfg.seed);
  TrainState state{VaeModel::create(arch, root.fork(kModelStream).next_u64()),
                   root.fork(kTrainStream),
                   data::BatchIterator(dataset.size(), cfg.batch_size, cfg.shuffle,
                                       root.fork(kDataStream)),
                   0};
  const Rng trial_root = root.fork(kTrialStream);

  RunResult result;
  sched::ScheduleState schedule = cfg.schedule;
  std::optional<vga::VgaDriver> driver;
  if (cfg.controller == ControllerKind::vga) driver.emplace(cfg.vga, root.fork(kVgaStream));

  // Runs one VGA outer event against the current main state.
  auto outer_event = [&](bool initial) {
    std::optional<Checkpoint> ckpt;
    std::optional<TrialContext> ctx;
    std::optional<CandidateResult> winner_state;
    double winner_fitness = 0.0;
    const std::uint64_t it = state.iteration;
    const std::uint64_t before = cfg.verify_isolation ? state_hash(state) : 0;

    vga::Evaluator eval = [&](double beta, std::size_t) {
      if (!ckpt) {
        ckpt = save_checkpoint(state);
        ctx = make_trial_context(state, dataset, cfg.vga.trial_window, cfg.probe_batches,
                                 cfg.adam, trial_root.fork(2 * it + 1).next_u64());
      }
      // Common random numbers across candidates of one event.
      CandidateResult r = evaluate_candidate(*ckpt, beta, *ctx, trial_root.fork(2 * it),
                                             cfg.vga, cfg.keep_winner_weights);
      ++result.candidate_evaluations;
      if (cfg.keep_winner_weights && (!winner_state || r.fitness < winner_fitness)) {
        winner_fitness = r.fitness;
        winner_state = std::move(r);
        return vga::TrialOutcome{winner_state->elbo_end, winner_state->elbo_start,
                                 winner_state->kl_end};
      }
      return vga::TrialOutcome{r.elbo_end, r.elbo_start, r.kl_end};
    };

    auto events = initial ? driver->initialize(eval, it) : driver->step(eval, it);
    if (cfg.verify_isolation && ckpt) {
      const std::uint64_t after = state_hash(state);
      result.isolation.push_back({it, before, after});
      if (after != before) throw IntegrityError("trial evaluation modified the main state");
    }
    if (cfg.keep_winner_weights && winner_state && winner_state->end_state) {
      bool accepted = false;
      for (const auto& e : events) accepted = accepted || e.accepted;
      if (accepted) state = std::move(*winner_state->end_state);
    }
    for (auto& e : events) {
      spdlog::debug("vga it={} {} beta={} f={} accepted={}", e.iteration, e.action,
                    e.candidate_beta, e.fitness, e.accepted);
      result.events.push_back(std::move(e));
    }
  };

  const auto t0 = std::chrono::steady_clock::now();
  if (driver) outer_event(true);

  while (state.iteration < cfg.iterations) {
    const std::uint64_t it = state.iteration;
    if (driver && it > 0 && it % cfg.outer_interval == 0) outer_event(false);
    if (state.iteration >= cfg.iterations) break;

    const double beta = driver ? driver->applied_beta() : sched::current_beta(schedule);
    const Tensor batch = dataset.gather(state.batches.next());
    ElboReport report = inner_step(state.model, batch, beta, state.rng, cfg.adam);
    report.iteration = state.iteration;

    if (!driver) {
      double error = std::numeric_limits<double>::quiet_NaN();
      if (schedule.kind == sched::Kind::pid) {
        sched::pid_step(schedule, report.kl_total);
        error = schedule.last_error;
      } else {
        sched::tick(schedule);
      }
      if (state.iteration % cfg.log_interval == 0 || state.iteration + 1 == cfg.iterations) {
        result.schedule_trace.push_back({state.iteration, beta, report.kl_total, error});
      }
    }

    if (state.iteration % cfg.log_interval == 0 || state.iteration + 1 == cfg.iterations) {
      MetricsRow row;
      row.iteration = state.iteration;
      row.beta = beta;
      row.recon = report.recon_loss;
      row.rate = report.kl_total;
      row.total = report.total_loss;
      row.kl_per_dim = report.kl_per_dim;
      row.fitness = driver ? driver->applied_fitness() : std::numeric_limits<double>::quiet_NaN();
      row.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (progress) progress(row);
      result.metrics.push_back(std::move(row));
    }
    ++state.iteration;
  }
  result.final_state = std::move(state);
  return result;
}

}  // namespace evae
