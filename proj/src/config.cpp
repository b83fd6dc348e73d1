#include "evae/config.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "evae/csv.hpp"
#include "evae/errors.hpp"

namespace evae {
namespace {

struct Field {
  std::string section;
  std::string key;
  bool required;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("expected a number, got '" + v + "'");
  return out;
}

std::uint64_t parse_uint(const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("expected a non-negative integer, got '" + v + "'");
  }
  return std::stoull(v);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

std::vector<std::size_t> parse_list(const std::string& v) {
  std::vector<std::size_t> out;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(parse_uint(trim(item)));
  if (out.empty()) throw ConfigError("expected a comma-separated list of widths");
  return out;
}

std::string fmt(double v) { return csv::format_double(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <class T>
Field num(const char* section, const char* key, T& ref, bool required = false) {
  return {section, key, required,
          [&ref](const std::string& v) {
            if constexpr (std::is_same_v<T, double>) {
              ref = parse_double(v);
            } else if constexpr (std::is_same_v<T, bool>) {
              ref = parse_bool(v);
            } else {
              ref = static_cast<T>(parse_uint(v));
            }
          },
          [&ref] {
            if constexpr (std::is_same_v<T, double> || std::is_same_v<T, bool>) {
              return fmt(ref);
            } else {
              return fmt(static_cast<std::uint64_t>(ref));
            }
          }};
}

// Every configurable key; closures bind to `cfg`.
std::vector<Field> fields(ExperimentConfig& cfg) {
  auto& d = cfg.data;
  auto& m = cfg.model;
  auto& t = cfg.train;
  auto& v = t.vga;
  auto& s = t.schedule;
  std::vector<Field> f{
      num("data", "canvas", d.canvas),
      num("data", "shapes", d.shapes),
      num("data", "scales", d.scales),
      num("data", "orientations", d.orientations),
      num("data", "positions_x", d.positions_x),
      num("data", "positions_y", d.positions_y),
      num("data", "scale_min", d.scale_min),
      num("data", "scale_max", d.scale_max),
      num("data", "seed", d.seed),
      {"data", "cache", false, [&cfg](const std::string& x) { cfg.dataset_cache = x; },
       [&cfg] { return cfg.dataset_cache.string(); }},
      {"model", "hidden", false, [&m](const std::string& x) { m.hidden = parse_list(x); },
       [&m] {
         std::string out;
         for (std::size_t i = 0; i < m.hidden.size(); ++i) {
           out += (i ? "," : "") + std::to_string(m.hidden[i]);
         }
         return out;
       }},
      num("model", "latent_dim", m.latent_dim),
      {"model", "activation", false,
       [&m](const std::string& x) { m.activation = activation_from_string(x); },
       [&m] { return to_string(m.activation); }},
      {"model", "likelihood", false,
       [&m](const std::string& x) { m.likelihood = likelihood_from_string(x); },
       [&m] { return to_string(m.likelihood); }},
      num("train", "iterations", t.iterations, true),
      num("train", "outer_interval", t.outer_interval),
      num("train", "batch_size", t.batch_size),
      num("train", "log_interval", t.log_interval),
      num("train", "shuffle", t.shuffle),
      num("train", "lr", t.adam.lr),
      num("train", "adam_beta1", t.adam.beta1),
      num("train", "adam_beta2", t.adam.beta2),
      num("train", "adam_eps", t.adam.eps),
      num("train", "probe_batches", t.probe_batches),
      num("train", "keep_winner_weights", t.keep_winner_weights),
      num("train", "verify_isolation", t.verify_isolation),
      num("train", "seed", t.seed),
      {"controller", "kind", true, [&cfg](const std::string& x) { apply_controller(cfg, x); },
       [&cfg] { return cfg.controller; }},
      num("vga", "pr_m", v.pr_m),
      num("vga", "pr_c", v.pr_c),
      num("vga", "eta", v.eta),
      num("vga", "population", v.population),
      num("vga", "set_point", v.set_point),
      num("vga", "beta_min", v.beta_min),
      num("vga", "beta_max", v.beta_max),
      num("vga", "tau", v.tau),
      num("vga", "trial_window", v.trial_window),
      {"vga", "gate_order", false,
       [&v](const std::string& x) { v.gate_order = vga::gate_order_from_string(x); },
       [&v] { return vga::to_string(v.gate_order); }},
      {"vga", "selection", false,
       [&v](const std::string& x) { v.selection = vga::selection_mode_from_string(x); },
       [&v] { return vga::to_string(v.selection); }},
      {"vga", "rescore", false,
       [&v](const std::string& x) { v.rescore = vga::rescore_from_string(x); },
       [&v] { return vga::to_string(v.rescore); }},
      num("vga", "mutation_scale", v.mutation_scale),
      num("vga", "init_low", v.init_low),
      num("vga", "init_high", v.init_high),
      num("vga", "negate_fitness", v.negate_fitness),
      num("schedule", "beta", s.constant.beta),
      {"schedule", "horizon", false,
       [&s](const std::string& x) { s.cost.horizon = s.cyclical.horizon = parse_double(x); },
       [&s] { return fmt(s.cost.horizon); }},
      num("schedule", "slope", s.cost.slope),
      num("schedule", "cycles", s.cyclical.cycles),
      num("schedule", "ramp", s.cyclical.ramp),
      {"schedule", "anneal_max", false,
       [&s](const std::string& x) { s.cost.beta_max = s.cyclical.beta_max = parse_double(x); },
       [&s] { return fmt(s.cost.beta_max); }},
      num("schedule", "kp", s.pid.kp),
      num("schedule", "ki", s.pid.ki),
      num("schedule", "kd", s.pid.kd),
      num("schedule", "set_point", s.pid.set_point),
      num("schedule", "beta_init", s.pid.beta_init),
      num("schedule", "beta_max", s.pid.beta_max),
      {"output", "dir", false, [&cfg](const std::string& x) { cfg.output_dir = x; },
       [&cfg] { return cfg.output_dir.string(); }},
  };
  return f;
}

}  // namespace

void apply_controller(ExperimentConfig& cfg, const std::string& controller) {
  if (controller == "vga") {
    cfg.train.controller = ControllerKind::vga;
  } else {
    cfg.train.controller = ControllerKind::schedule;
    cfg.train.schedule.kind = sched::kind_from_string(controller);
  }
  cfg.controller = controller;
}

std::map<std::string, std::map<std::string, std::string>> ExperimentConfig::resolved() const {
  ExperimentConfig copy = *this;
  std::map<std::string, std::map<std::string, std::string>> out;
  for (const auto& f : fields(copy)) out[f.section][f.key] = f.get();
  return out;
}

std::string ExperimentConfig::to_ini() const {
  ExperimentConfig copy = *this;
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields(copy)) {
    if (f.section != section) {
      os << (section.empty() ? "" : "\n") << '[' << f.section << "]\n";
      section = f.section;
    }
    os << f.key << " = " << f.get() << '\n';
  }
  return os.str();
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  auto table = fields(cfg);
  std::set<std::pair<std::string, std::string>> seen;
  std::set<std::string> sections;
  for (const auto& f : table) sections.insert(f.section);

  std::istringstream is(text);
  std::string raw;
  std::string section;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  // The controller kind decides which schedule fields matter, so apply it
  // before the rest regardless of where it appears.
  std::vector<std::tuple<std::size_t, const Field*, std::string>> assignments;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto c = line.find_first_of("#;"); c != std::string::npos) line.resize(c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    if (section.empty()) fail("key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Field* field = nullptr;
    for (const auto& f : table) {
      if (f.section == section && f.key == key) field = &f;
    }
    if (field == nullptr) fail("unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert({section, key}).second) fail("duplicate key '" + key + "'");
    assignments.emplace_back(lineno, field, value);
  }
  std::stable_partition(assignments.begin(), assignments.end(), [](const auto& a) {
    return std::get<1>(a)->section == "controller";
  });
  for (const auto& [line, field, value] : assignments) {
    try {
      field->set(value);
    } catch (const ConfigError& e) {
      lineno = line;
      fail(field->section + "." + field->key + ": " + e.what());
    }
  }
  for (const auto& f : table) {
    if (seen.count({f.section, f.key})) continue;
    if (f.required) {
      throw ConfigError(origin + ": missing required key " + f.section + "." + f.key);
    }
    cfg.notices.push_back("defaulted " + f.section + "." + f.key + " = " + f.get());
  }
  cfg.data.validate();
  cfg.train.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::filesystem::path resolve_config_path(const std::string& name_or_path) {
  namespace fs = std::filesystem;
  std::vector<fs::path> candidates{name_or_path};
  for (const fs::path base : {fs::path("configs"), fs::path(EVAE_SOURCE_DIR) / "configs"}) {
    candidates.push_back(base / name_or_path);
    candidates.push_back(base / (name_or_path + ".ini"));
  }
  for (const auto& c : candidates) {
    if (fs::is_regular_file(c)) return c;
  }
  throw ConfigError("config '" + name_or_path + "' not found (tried path and configs/ presets)");
}

}  // namespace evae
