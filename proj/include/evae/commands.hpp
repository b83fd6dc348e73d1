#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evae/config.hpp"
#include "evae/sprites.hpp"
#include "evae/trainer.hpp"

namespace evae::cli {

struct RunOptions {
  std::string config;  // path or preset name
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  bool swap_gates = false;
  std::optional<std::string> controller;
};

struct TraverseOptions {
  std::filesystem::path checkpoint;
  std::string config;  // dataset source for the seed image
  std::size_t index = 0;
  std::vector<std::size_t> dims;  // empty: every latent dimension
  double lo = -3.0;
  double hi = 3.0;
  std::size_t steps = 10;
  std::filesystem::path out = "traversal.pgm";
};

struct ExportOptions {
  std::vector<std::filesystem::path> metrics;
  std::filesystem::path out = "export";
};

struct GenDataOptions {
  std::string config;
  std::filesystem::path out = "sprites.bin";
  std::optional<std::filesystem::path> pgm_dir;
  std::size_t pgm_count = 0;
};

/// Exit codes: 0 success, 1 runtime failure, 2 invalid input.
int cmd_run(const RunOptions& opts);
int cmd_traverse(const TraverseOptions& opts);
int cmd_export(const ExportOptions& opts);
int cmd_gen_data(const GenDataOptions& opts);

/// Loads the cache named by the config when it exists, otherwise generates
/// the grid (and writes the cache if a path is configured).
data::Dataset obtain_dataset(const ExperimentConfig& cfg);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows,
                       std::size_t latent_dim);
void write_events_csv(const std::filesystem::path& path,
                      const std::vector<vga::EventRecord>& events);
void write_schedule_csv(const std::filesystem::path& path,
                        const std::vector<ScheduleTraceRow>& rows);

}  // namespace evae::cli
