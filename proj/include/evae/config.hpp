#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "evae/sprites.hpp"
#include "evae/trainer.hpp"
#include "evae/vae.hpp"

namespace evae {

/// Everything a `run` needs, parsed from an INI-style file:
///
///   [section]
///   key = value   # comment
///
/// Sections: data, model, train, controller, vga, schedule, output.
/// `train.iterations` and `controller.kind` are required; every other key
/// falls back to a default and is reported in `notices`.
struct ExperimentConfig {
  data::DatasetConfig data;
  std::filesystem::path dataset_cache;  // empty: generate in memory
  VaeArchitecture model;
  TrainerConfig train;
  /// vga, constant, cost, cyclical or pid
  std::string controller = "vga";
  std::filesystem::path output_dir = "runs/default";

  std::vector<std::string> notices;

  /// Resolved key/value pairs per section, every key present.
  std::map<std::string, std::map<std::string, std::string>> resolved() const;
  /// INI text of resolved(); parses back to an equal configuration.
  std::string to_ini() const;
};

/// Parses config text. `origin` prefixes error messages ("file:line: ...").
/// Throws ConfigError on unknown sections or keys, malformed values, or
/// missing required keys.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Finds a config by path or by preset name under configs/ (".ini" optional).
std::filesystem::path resolve_config_path(const std::string& name_or_path);

/// Applies `controller` (vga or a schedule kind) to cfg.train.
void apply_controller(ExperimentConfig& cfg, const std::string& controller);

}  // namespace evae
