#include <CLI11.hpp>

#include "evae/commands.hpp"
#include "evae/log.hpp"

int main(int argc, char** argv) {
  evae::log::init_from_env();

  CLI::App app{"evae: evolving KL-weight VAE laboratory"};
  app.require_subcommand(1);

  evae::cli::RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Train a VAE with the configured beta controller");
  run_cmd->add_option("--config", run.config, "Config file or preset name")->required();
  run_cmd->add_option("--seed", run.seed, "Override train.seed");
  run_cmd->add_option("--out", run.out, "Override output.dir");
  run_cmd->add_flag("--swap-gates", run.swap_gates, "Route pr_m to mutation and pr_c to crossover");
  run_cmd->add_option("--controller", run.controller, "vga, constant, cost, cyclical or pid");

  evae::cli::TraverseOptions trav;
  auto* trav_cmd = app.add_subcommand("traverse", "Render a latent traversal grid (PGM)");
  trav_cmd->add_option("--checkpoint", trav.checkpoint, "Checkpoint file")->required();
  trav_cmd->add_option("--config", trav.config, "Config providing the [data] section")->required();
  trav_cmd->add_option("--index", trav.index, "Seed image index");
  trav_cmd->add_option("--dims", trav.dims, "Latent dimensions to sweep (default: all)")
      ->delimiter(',');
  trav_cmd->add_option("--lo", trav.lo, "Sweep start");
  trav_cmd->add_option("--hi", trav.hi, "Sweep end");
  trav_cmd->add_option("--steps", trav.steps, "Points per sweep");
  trav_cmd->add_option("--out", trav.out, "Output PGM path");

  evae::cli::ExportOptions exp;
  auto* exp_cmd = app.add_subcommand("export", "Derive R-D, per-dimension KL and beta tables");
  exp_cmd->add_option("--metrics", exp.metrics, "metrics.csv files")->required();
  exp_cmd->add_option("--out", exp.out, "Output directory");

  evae::cli::GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the sprite dataset cache");
  gen_cmd->add_option("--config", gen.config, "Config providing the [data] section")->required();
  gen_cmd->add_option("--out", gen.out, "Cache file path");
  gen_cmd->add_option("--pgm", gen.pgm_dir, "Also export images as PGM into this directory");
  gen_cmd->add_option("--pgm-count", gen.pgm_count, "Number of images to export as PGM");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*run_cmd) return evae::cli::cmd_run(run);
  if (*trav_cmd) return evae::cli::cmd_traverse(trav);
  if (*exp_cmd) return evae::cli::cmd_export(exp);
  return evae::cli::cmd_gen_data(gen);
}
