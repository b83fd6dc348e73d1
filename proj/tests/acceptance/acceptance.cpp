// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/helpers.hpp"
#include "evae/checkpoint.hpp"
#include "evae/commands.hpp"
#include "evae/config.hpp"
#include "evae/hashing.hpp"
#include "evae/schedulers.hpp"
#include "evae/trainer.hpp"
#include "evae/vae.hpp"
#include "evae/vga.hpp"

using namespace evae;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Rows of a run used by the identity check in criterion 8.
std::vector<MetricsRow> logged_rows;

// ---------------------------------------------------------------------------

void gradient_correctness() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  double worst = 0.0;
  std::size_t scalars = 0;
  for (int trial = 0; trial < 20; ++trial) {
    VaeArchitecture a;
    a.input_dim = 3 + rng.index(6);
    a.hidden.clear();
    for (std::size_t l = 0, n = 1 + rng.index(2); l < n; ++l) a.hidden.push_back(2 + rng.index(5));
    a.latent_dim = 1 + rng.index(4);
    a.activation = std::array{Activation::relu, Activation::tanh, Activation::sigmoid}[rng.index(3)];
    a.likelihood = rng.uniform() < 0.5 ? Likelihood::bernoulli : Likelihood::gaussian;
    VaeModel m = VaeModel::create(a, rng.next_u64());
    Tensor x = Tensor::matrix(2 + rng.index(4), a.input_dim);
    for (double& v : x.values()) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
    const double beta = rng.uniform(0.0, 5.0);
    const std::uint64_t noise_seed = rng.next_u64();
    auto loss = [&](Graph& g) {
      Rng noise(noise_seed);
      return elbo_loss(g, m, x, beta, noise).loss;
    };
    worst = std::max(worst, test::max_gradient_error(m.params(), loss, 1e-5, 0.0));
    scalars += m.params().scalar_count();
  }
  const double secs = seconds_since(t0);
  report(1, "gradient correctness", worst <= 1e-4 && secs < 60.0,
         fmt("20 random VAEs, %zu parameters, max relative error %.2e (tol 1e-4, h=1e-5, "
             "no denominator floor), %.1fs (limit 60s)",
             scalars, worst, secs));
}

void kl_closed_form() {
  Rng rng(77);
  double worst = 0.0;
  const std::size_t samples = 100000;
  for (int trial = 0; trial < 50; ++trial) {
    const double mu = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(1.5, 3.0);
    const double lv = rng.uniform(-1.0, 1.0);
    LatentStats s{Tensor({1, 1}, std::vector<double>{mu}), Tensor({1, 1}, std::vector<double>{lv})};
    const double analytic = kl_per_dim(s)[0];
    // E_q[log q(z) - log p(z)] with z drawn through the reparameterization.
    const double sd = std::exp(0.5 * lv);
    double acc = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      const double eps = rng.normal();
      const double z = mu + sd * eps;
      acc += -0.5 * lv - 0.5 * eps * eps + 0.5 * z * z;
    }
    const double mc = acc / static_cast<double>(samples);
    worst = std::max(worst, std::abs(mc - analytic) / analytic);
  }
  auto point = [](double mu, double lv) {
    return kl_per_dim({Tensor({1, 1}, std::vector<double>{mu}),
                       Tensor({1, 1}, std::vector<double>{lv})})[0];
  };
  const double p0 = std::abs(point(0.0, 0.0));
  const double p1 = std::abs(point(1.0, 0.0) - 0.5);
  report(2, "KL closed form", worst <= 0.02 && p0 <= 1e-12 && p1 <= 1e-12,
         fmt("50 random stats vs 1e5-sample Monte Carlo, max relative deviation %.4f (tol 0.02); "
             "|KL(0,1)|=%.1e, |KL(1,1)-0.5|=%.1e (tol 1e-12)",
             worst, p0, p1));
}

void sbx_properties() {
  Rng rng(5);
  double worst_sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double prev = rng.uniform(1e-4, 100.0);
    const double cur = rng.uniform(1e-4, 100.0);
    const double r = vga::sample_rc(rng.uniform(), 2.0);
    auto [a, b] = vga::crossover(prev, cur, r);
    worst_sum = std::max(worst_sum, std::abs((a + b) - (prev + cur)));
  }
  const std::size_t n = 1000000;
  const double eta = 2.0;
  std::vector<double> r(n);
  for (auto& v : r) v = vga::sample_rc(rng.uniform(), eta);
  std::sort(r.begin(), r.end());
  // CDF of the SBX density: r^(eta+1)/2 below 1, 1 - r^-(eta+1)/2 above.
  auto cdf = [eta](double x) {
    return x <= 1.0 ? 0.5 * std::pow(x, eta + 1.0) : 1.0 - 0.5 * std::pow(x, -(eta + 1.0));
  };
  double ks = 0.0;
  std::size_t below_one = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(r[i]);
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / n),
                   std::abs(f - static_cast<double>(i + 1) / n)});
    below_one += r[i] <= 1.0;
  }
  const double p1 = static_cast<double>(below_one) / n;
  report(3, "SBX", worst_sum <= 1e-12 && ks < 0.01 && std::abs(p1 - 0.5) <= 0.01,
         fmt("pair-sum error %.1e (tol 1e-12); KS distance %.5f over 1e6 draws at eta=2 "
             "(tol 0.01); P(r_c<=1)=%.4f (0.5 +- 0.01)",
             worst_sum, ks, p1));
}

void cauchy_mutation() {
  Rng rng(6);
  vga::VgaConfig cfg;
  const std::size_t n = 1000000;
  std::vector<double> draws(n);
  std::size_t inside = 0;
  bool bounded = true;
  for (auto& d : draws) {
    const double beta0 = std::exp(rng.uniform(std::log(cfg.beta_min), std::log(cfg.beta_max)));
    auto [beta, r_m] = vga::mutate(beta0, rng, cfg.mutation_scale, cfg);
    d = r_m;
    inside += std::abs(r_m) <= 1.0;
    bounded = bounded && beta >= cfg.beta_min && beta <= cfg.beta_max;
  }
  const double med = median(draws);
  const double p = static_cast<double>(inside) / n;
  report(4, "Cauchy mutation", std::abs(med) <= 0.01 && std::abs(p - 0.5) <= 0.01 && bounded,
         fmt("median %.5f (0 +- 0.01); P(|r_m|<=1)=%.4f (0.5 +- 0.01); mutated beta %s "
             "[1e-4, 100] for all 1e6 draws",
             med, p, bounded ? "within" : "OUTSIDE"));
}

void plant_convergence() {
  const auto t0 = Clock::now();
  const double a = 40.0, d0 = 5.0, kappa = 0.2, c = 10.0;
  auto kl = [&](double b) { return a / (1.0 + b); };
  auto dist = [&](double b) { return d0 + kappa * b; };
  vga::VgaConfig cfg;
  cfg.population = 10;
  cfg.set_point = c;
  // Grid-search oracle on the same fitness the driver minimizes.
  double best_beta = 0.0, best_f = INFINITY;
  for (int i = 0; i <= 200000; ++i) {
    const double b = cfg.beta_min * std::pow(cfg.beta_max / cfg.beta_min, i / 200000.0);
    const double f = vga::fitness(dist(b) + kl(b), 0.0, kl(b), cfg);
    if (f < best_f) {
      best_f = f;
      best_beta = b;
    }
  }
  const int seeds = 10;
  int converged = 0;
  std::size_t worst_generations = 0, worst_events = 0;
  double worst_rel = 0.0;
  for (int seed = 1; seed <= seeds; ++seed) {
    vga::VgaDriver drv(cfg, Rng(static_cast<std::uint64_t>(seed)));
    auto eval = [&](double b, std::size_t) {
      const double cur = drv.applied_beta();
      return vga::TrialOutcome{dist(b) + kl(b), dist(cur) + kl(cur), kl(b)};
    };
    drv.initialize(eval, 0);
    std::size_t events = 0;
    auto ok = [&] {
      return std::abs(kl(drv.applied_beta()) - c) <= 0.05 * c &&
             std::abs(drv.applied_beta() - best_beta) <= 0.1 * best_beta;
    };
    while (!ok() && drv.generations() < 200) drv.step(eval, ++events);
    if (ok()) {
      ++converged;
      worst_generations = std::max(worst_generations, drv.generations());
      worst_events = std::max(worst_events, events);
      worst_rel = std::max(worst_rel, std::abs(drv.applied_beta() - best_beta) / best_beta);
    }
  }
  const double secs = seconds_since(t0);
  report(5, "controller convergence on the synthetic plant",
         converged == seeds && std::abs(best_beta - 3.0) < 1e-3 && secs < 10.0,
         fmt("grid-search beta*=%.4f; %d/%d seeds reach |KL-c|<=0.5 with beta within 10%% of "
             "beta* in <=200 generations (worst %zu generations, %zu gate draws, beta error "
             "%.3f), %.2fs (limit 10s)",
             best_beta, converged, seeds, worst_generations, worst_events, worst_rel, secs));
}

struct DeskRun {
  double rate = 0.0;
  double recon = 0.0;
};

DeskRun tail_means(const RunResult& r, std::uint64_t window) {
  DeskRun out;
  std::size_t n = 0;
  const std::uint64_t last = r.metrics.back().iteration;
  for (const auto& m : r.metrics) {
    if (m.iteration + window <= last) continue;
    out.rate += m.rate;
    out.recon += m.recon;
    ++n;
  }
  out.rate /= static_cast<double>(n);
  out.recon /= static_cast<double>(n);
  return out;
}

void dsprites_end_to_end() {
  const auto t0 = Clock::now();
  ExperimentConfig evae_cfg = load_config(resolve_config_path("dsprites_evae"));
  ExperimentConfig base_cfg = load_config(resolve_config_path("dsprites_beta4"));
  const data::Dataset ds = data::generate_dataset(evae_cfg.data);
  const double c = evae_cfg.train.vga.set_point;
  std::vector<double> rates, recon_e, recon_b;
  std::string per_seed;
  for (std::uint64_t seed : {1, 2, 3}) {
    for (auto* cfg : {&evae_cfg, &base_cfg}) {
      cfg->train.seed = seed;
      cfg->train.log_interval = 1;
      cfg->model.input_dim = ds.pixel_count();
    }
    RunResult e = run_experiment(evae_cfg.train, evae_cfg.model, ds);
    RunResult b = run_experiment(base_cfg.train, base_cfg.model, ds);
    const DeskRun te = tail_means(e, 500), tb = tail_means(b, 500);
    rates.push_back(te.rate);
    recon_e.push_back(te.recon);
    recon_b.push_back(tb.recon);
    per_seed += fmt(" seed%llu: R=%.2f D=%.2f vs baseline D=%.2f (R=%.2f);",
                    static_cast<unsigned long long>(seed), te.rate, te.recon, tb.recon, tb.rate);
    logged_rows.insert(logged_rows.end(), e.metrics.begin(), e.metrics.end());
    logged_rows.insert(logged_rows.end(), b.metrics.begin(), b.metrics.end());
  }
  const double r_med = median(rates), de = median(recon_e), db = median(recon_b);
  const double secs = seconds_since(t0);
  const bool ok = r_med >= 0.85 * c && r_med <= 1.15 * c && de <= db && secs <= 1800.0;
  report(6, "miniature sprites end to end", ok,
         fmt("median final-500 R=%.3f (band [%.1f, %.1f]); median D=%.3f vs beta=4 baseline "
             "%.3f;",
             r_med, 0.85 * c, 1.15 * c, de, db) +
             per_seed + fmt(" %.0fs (limit 1800s)", secs));
}

void trial_isolation() {
  data::DatasetConfig dc;
  dc.canvas = 16;
  dc.scales = 2;
  dc.orientations = 4;
  dc.positions_x = 4;
  dc.positions_y = 4;
  const data::Dataset ds = data::generate_dataset(dc);
  VaeArchitecture arch;
  arch.input_dim = ds.pixel_count();
  arch.hidden = {64};
  arch.latent_dim = 4;
  TrainerConfig cfg;
  cfg.iterations = 400;
  cfg.batch_size = 16;
  cfg.adam.lr = 1e-3;
  cfg.vga.population = 5;
  cfg.vga.trial_window = 5;
  cfg.vga.set_point = 4.0;
  cfg.vga.pr_m = 0.05;
  cfg.vga.pr_c = 0.3;
  cfg.probe_batches = 2;
  cfg.verify_isolation = true;
  cfg.seed = 11;
  RunResult a = run_experiment(cfg, arch, ds);

  // Direct check around individual evaluations as well.
  TrainState st = a.final_state;
  const Checkpoint ck = save_checkpoint(st);
  const TrialContext ctx = make_trial_context(st, ds, 5, 2, cfg.adam, 99);
  bool direct_ok = true;
  for (int i = 0; i < 20; ++i) {
    const std::uint64_t before = state_hash(st);
    evaluate_candidate(ck, 0.1 + 0.5 * i, ctx, Rng(static_cast<std::uint64_t>(i)), cfg.vga);
    direct_ok = direct_ok && before == state_hash(st) && fnv1a64(ck.bytes) == ck.hash;
  }

  std::size_t mismatched = 0;
  for (const auto& chk : a.isolation) mismatched += chk.hash_before != chk.hash_after;

  const fs::path dir = fs::temp_directory_path() / "evae_acceptance_isolation";
  fs::create_directories(dir);
  cli::write_metrics_csv(dir / "a.csv", a.metrics, arch.latent_dim);
  RunResult b = run_experiment(cfg, arch, ds);
  cli::write_metrics_csv(dir / "b.csv", b.metrics, arch.latent_dim);
  auto slurp = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream s;
    s << is.rdbuf();
    return s.str();
  };
  const bool identical = slurp(dir / "a.csv") == slurp(dir / "b.csv");
  fs::remove_all(dir);
  logged_rows.insert(logged_rows.end(), a.metrics.begin(), a.metrics.end());

  report(7, "trial isolation",
         a.candidate_evaluations >= 20 && mismatched == 0 && !a.isolation.empty() && direct_ok &&
             identical,
         fmt("%zu candidate evaluations over %zu evaluation events, %zu hash mismatches; 20 "
             "direct evaluations %s; rerun metrics CSV %s",
             a.candidate_evaluations, a.isolation.size(), mismatched,
             direct_ok ? "left state and checkpoint unchanged" : "CHANGED the state",
             identical ? "byte-identical" : "DIFFERS"));
}

void logged_identities() {
  double worst_total = 0.0, worst_rate = 0.0;
  for (const auto& r : logged_rows) {
    double s = 0.0;
    for (double k : r.kl_per_dim) s += k;
    worst_total = std::max(worst_total, std::abs(r.total - (r.recon + r.beta * r.rate)));
    worst_rate = std::max(worst_rate, std::abs(r.rate - s));
  }
  report(8, "logged identities",
         !logged_rows.empty() && worst_total <= 1e-10 && worst_rate <= 1e-10,
         fmt("%zu rows; max |total-(D+beta R)|=%.1e, max |R-sum KL_j|=%.1e (tol 1e-10)",
             logged_rows.size(), worst_total, worst_rate));
}

void scheduler_contracts() {
  auto cost = sched::ScheduleState::make_cost(10000.0);
  auto at = [](sched::ScheduleState s, std::uint64_t t) {
    s.t = t;
    return sched::current_beta(s);
  };
  const double w0 = at(cost, 0), wh = at(cost, 5000), wt = at(cost, 10000);
  const bool cost_ok = w0 <= 0.01 && std::abs(wh - 0.5) <= 1e-12 && wt >= 0.99;

  auto cyc = sched::ScheduleState::make_cyclical(10000.0, 8, 0.5);
  bool cyc_ok = true;
  const double period = 10000.0 / 8.0;
  for (int k = 0; k < 8; ++k) {
    const auto start = static_cast<std::uint64_t>(std::ceil(k * period));
    cyc_ok = cyc_ok && at(cyc, start) == 0.0;
    for (auto t = static_cast<std::uint64_t>(std::ceil(k * period + 0.5 * period));
         t < static_cast<std::uint64_t>(std::ceil((k + 1) * period)); ++t) {
      cyc_ok = cyc_ok && at(cyc, t) == 1.0;
    }
  }

  sched::PidParams p;
  p.kp = p.ki = p.kd = 0.0;
  p.beta_init = 1.7;
  auto pid = sched::ScheduleState::make_pid(p);
  Rng rng(1);
  bool pid_ok = true;
  for (int i = 0; i < 1000; ++i) pid_ok = pid_ok && sched::pid_step(pid, rng.uniform(0, 50)) == 1.7;

  report(9, "scheduler contracts", cost_ok && cyc_ok && pid_ok,
         fmt("cost w(0)=%.4f (<=0.01), w(T/2)=%.12f (0.5), w(T)=%.4f (>=0.99); cyclical "
             "0 at all 8 cycle starts and 1 from each ramp end: %s; zero-gain PID constant "
             "over 1000 steps: %s",
             w0, wh, wt, cyc_ok ? "yes" : "NO", pid_ok ? "yes" : "NO"));
}

}  // namespace

// Optional arguments select criteria by number; default runs all nine.
int main(int argc, char** argv) {
  const auto t0 = Clock::now();
  const std::vector<std::function<void()>> criteria{
      gradient_correctness, kl_closed_form,      sbx_properties,
      cauchy_mutation,      plant_convergence,   dsprites_end_to_end,
      trial_isolation,      logged_identities,   scheduler_contracts};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) {
      continue;
    }
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(id, "aborted", false, e.what());
    }
  }
  std::printf("%d failing criteria, %.0fs total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
