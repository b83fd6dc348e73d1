#include "evae/commands.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "evae/checkpoint.hpp"
#include "evae/csv.hpp"
#include "evae/errors.hpp"
#include "evae/hashing.hpp"
#include "evae/log.hpp"
#include "evae/traverse.hpp"

namespace evae::cli {
namespace fs = std::filesystem;
namespace {

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
  if (!os) throw ConfigError("cannot write " + p.string());
}

}  // namespace

data::Dataset obtain_dataset(const ExperimentConfig& cfg) {
  if (!cfg.dataset_cache.empty() && fs::exists(cfg.dataset_cache)) {
    data::Dataset ds = data::Dataset::load(cfg.dataset_cache);
    if (!(ds.config() == cfg.data)) {
      throw ConfigError("dataset cache " + cfg.dataset_cache.string() +
                        " was generated with different [data] settings");
    }
    return ds;
  }
  data::Dataset ds = data::generate_dataset(cfg.data);
  if (!cfg.dataset_cache.empty()) {
    if (cfg.dataset_cache.has_parent_path()) fs::create_directories(cfg.dataset_cache.parent_path());
    ds.save(cfg.dataset_cache);
  }
  return ds;
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricsRow>& rows,
                       std::size_t latent_dim) {
  std::vector<std::string> header{"iteration", "beta", "recon", "rate", "total"};
  for (std::size_t i = 0; i < latent_dim; ++i) header.push_back("kl_" + std::to_string(i));
  header.push_back("fitness");
  csv::Writer w(path, header);
  for (const auto& r : rows) {
    w.cell(r.iteration).cell(r.beta).cell(r.recon).cell(r.rate).cell(r.total);
    for (double k : r.kl_per_dim) w.cell(k);
    if (r.fitness == r.fitness) {
      w.cell(r.fitness);
    } else {
      w.empty();
    }
    w.end_row();
  }
}

void write_events_csv(const fs::path& path, const std::vector<vga::EventRecord>& events) {
  csv::Writer w(path, {"iteration", "action", "parent_prev", "parent_cur", "r_c_or_r_m",
                       "candidate_beta", "fitness", "accepted"});
  auto opt = [&w](double v) -> csv::Writer& { return v == v ? w.cell(v) : w.empty(); };
  for (const auto& e : events) {
    w.cell(e.iteration).cell(e.action);
    opt(e.parent_prev);
    opt(e.parent_cur);
    opt(e.draw);
    w.cell(e.candidate_beta);
    opt(e.fitness);
    w.cell(std::string(e.accepted ? "1" : "0"));
    w.end_row();
  }
}

void write_schedule_csv(const fs::path& path, const std::vector<ScheduleTraceRow>& rows) {
  csv::Writer w(path, {"iteration", "beta", "kl_observed", "error"});
  for (const auto& r : rows) {
    w.cell(r.iteration).cell(r.beta).cell(r.kl_observed);
    if (r.error == r.error) {
      w.cell(r.error);
    } else {
      w.empty();
    }
    w.end_row();
  }
}

int cmd_run(const RunOptions& opts) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(resolve_config_path(opts.config));
    if (opts.seed) cfg.train.seed = *opts.seed;
    if (opts.out) cfg.output_dir = *opts.out;
    if (opts.swap_gates) cfg.train.vga.gate_order = vga::GateOrder::swapped;
    if (opts.controller) apply_controller(cfg, *opts.controller);
    cfg.train.validate();
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  for (const auto& n : cfg.notices) spdlog::info("{}", n);

  try {
    const data::Dataset dataset = obtain_dataset(cfg);
    cfg.model.input_dim = dataset.pixel_count();
    spdlog::info("dataset: {} images of {}x{}", dataset.size(), cfg.data.canvas, cfg.data.canvas);
    fs::create_directories(cfg.output_dir);

    const std::uint64_t log_every = std::max<std::uint64_t>(1, cfg.train.iterations / 20);
    RunResult res = run_experiment(cfg.train, cfg.model, dataset, [&](const MetricsRow& r) {
      if (r.iteration % log_every == 0) {
        spdlog::info("it={} beta={:.4f} D={:.3f} R={:.3f} ({:.1f}s)", r.iteration, r.beta,
                     r.recon, r.rate, r.wall_seconds);
      }
    });

    const fs::path out = cfg.output_dir;
    write_metrics_csv(out / "metrics.csv", res.metrics, cfg.model.latent_dim);
    if (cfg.train.controller == ControllerKind::vga) {
      write_events_csv(out / "vga_events.csv", res.events);
    } else {
      write_schedule_csv(out / "schedule_trace.csv", res.schedule_trace);
    }
    {
      csv::Writer w(out / "timing.csv", {"iteration", "wall_seconds"});
      for (const auto& r : res.metrics) w.cell(r.iteration).cell(r.wall_seconds).end_row();
    }
    const Checkpoint ckpt = save_checkpoint(res.final_state);
    write_checkpoint_file(out / "final.ckpt", ckpt);
    write_file(out / "resolved_config.ini", cfg.to_ini());

    nlohmann::json manifest;
    manifest["format"] = "evae-run-manifest";
    manifest["version"] = 1;
    manifest["seed"] = cfg.train.seed;
    manifest["dataset_hash"] = git_blob_hash(dataset.serialize());
    manifest["checkpoint_hash"] = hex64(ckpt.hash);
    manifest["metrics_hash"] = git_blob_hash(read_file(out / "metrics.csv"));
    manifest["candidate_evaluations"] = res.candidate_evaluations;
    manifest["config"] = cfg.resolved();
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
    spdlog::info("wrote run artifacts to {}", out.string());
    return 0;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("run aborted: {}", e.what());
    return 1;
  }
}

int cmd_traverse(const TraverseOptions& opts) {
  try {
    const TrainState state = restore_checkpoint(read_checkpoint_file(opts.checkpoint));
    const ExperimentConfig cfg = load_config(resolve_config_path(opts.config));
    const data::Dataset dataset = obtain_dataset(cfg);
    if (opts.index >= dataset.size()) {
      throw UsageError("traverse: image index " + std::to_string(opts.index) + " out of range");
    }
    std::vector<std::size_t> dims = opts.dims;
    if (dims.empty()) {
      for (std::size_t d = 0; d < state.model.latent_dim(); ++d) dims.push_back(d);
    }
    const TraversalGrid grid = latent_traversal(state.model, dataset.gather({opts.index}), dims,
                                                opts.lo, opts.hi, opts.steps);
    if (opts.out.has_parent_path()) fs::create_directories(opts.out.parent_path());
    data::write_pgm(opts.out, grid.pixels, grid.height(), grid.width());
    spdlog::info("wrote {}x{} traversal grid to {}", grid.steps, grid.dims, opts.out.string());
    return 0;
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("traverse failed: {}", e.what());
    return 1;
  }
}

int cmd_export(const ExportOptions& opts) {
  try {
    std::vector<std::pair<std::string, csv::Table>> inputs;
    for (const auto& p : opts.metrics) {
      csv::Table t = csv::read(p);
      for (const char* col : {"iteration", "beta", "recon", "rate"}) {
        try {
          t.column(col);
        } catch (const ConfigError&) {
          throw ConfigError(p.string() + ": schema mismatch, missing column '" + col + "'");
        }
      }
      const std::string run = p.has_parent_path() ? p.parent_path().filename().string()
                                                  : p.stem().string();
      inputs.emplace_back(run, std::move(t));
    }
    fs::create_directories(opts.out);
    csv::Writer rd(opts.out / "rd_curve.csv", {"run", "iteration", "rate", "distortion"});
    csv::Writer kl(opts.out / "kl_per_dim.csv", {"run", "iteration", "dim", "kl"});
    csv::Writer bt(opts.out / "beta_trace.csv", {"run", "iteration", "beta"});
    for (const auto& [run, t] : inputs) {
      const auto it = t.column("iteration");
      const auto rate = t.column("rate");
      const auto recon = t.column("recon");
      const auto beta = t.column("beta");
      std::vector<std::pair<std::size_t, std::size_t>> kl_cols;
      for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (t.header[c].rfind("kl_", 0) == 0) {
          kl_cols.emplace_back(std::stoul(t.header[c].substr(3)), c);
        }
      }
      for (const auto& row : t.rows) {
        rd.cell(run).cell(row[it]).cell(row[rate]).cell(row[recon]).end_row();
        bt.cell(run).cell(row[it]).cell(row[beta]).end_row();
        for (const auto& [dim, c] : kl_cols) {
          kl.cell(run).cell(row[it]).cell(std::to_string(dim)).cell(row[c]).end_row();
        }
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("export failed: {}", e.what());
    return 1;
  }
}

int cmd_gen_data(const GenDataOptions& opts) {
  try {
    ExperimentConfig cfg = load_config(resolve_config_path(opts.config));
    cfg.dataset_cache.clear();
    const data::Dataset ds = obtain_dataset(cfg);
    if (opts.out.has_parent_path()) fs::create_directories(opts.out.parent_path());
    ds.save(opts.out);
    spdlog::info("wrote {} images to {} (hash {})", ds.size(), opts.out.string(),
                 git_blob_hash(ds.serialize()));
    if (opts.pgm_dir) {
      fs::create_directories(*opts.pgm_dir);
      for (std::size_t i = 0; i < std::min(opts.pgm_count, ds.size()); ++i) {
        data::write_pgm(*opts.pgm_dir / ("sprite_" + std::to_string(i) + ".pgm"), ds.image(i));
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("gen-data failed: {}", e.what());
    return 1;
  }
}

}  // namespace evae::cli
