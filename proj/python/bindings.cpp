#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "evae/checkpoint.hpp"
#include "evae/config.hpp"
#include "evae/errors.hpp"
#include "evae/hashing.hpp"
#include "evae/schedulers.hpp"
#include "evae/sprites.hpp"
#include "evae/trainer.hpp"
#include "evae/vae.hpp"
#include "evae/vga.hpp"

namespace py = pybind11;
using namespace evae;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
  const auto r = static_cast<std::size_t>(a.shape(0));
  const auto c = static_cast<std::size_t>(a.shape(1));
  return Tensor({r, c}, std::vector<double>(a.data(), a.data() + r * c));
}

py::array_t<double> column(const std::vector<MetricsRow>& rows, double MetricsRow::*field) {
  py::array_t<double> out(static_cast<py::ssize_t>(rows.size()));
  auto v = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < rows.size(); ++i) v(static_cast<py::ssize_t>(i)) = rows[i].*field;
  return out;
}

py::dict run(const std::string& config, std::optional<std::uint64_t> seed,
             std::optional<std::string> controller) {
  ExperimentConfig cfg = load_config(resolve_config_path(config));
  if (seed) cfg.train.seed = *seed;
  if (controller) apply_controller(cfg, *controller);
  const data::Dataset ds = data::generate_dataset(cfg.data);
  cfg.model.input_dim = ds.pixel_count();
  RunResult r;
  {
    py::gil_scoped_release release;
    r = run_experiment(cfg.train, cfg.model, ds);
  }
  py::array_t<std::uint64_t> it(static_cast<py::ssize_t>(r.metrics.size()));
  py::array_t<double> kl({static_cast<py::ssize_t>(r.metrics.size()),
                          static_cast<py::ssize_t>(cfg.model.latent_dim)});
  auto itv = it.mutable_unchecked<1>();
  auto klv = kl.mutable_unchecked<2>();
  for (std::size_t i = 0; i < r.metrics.size(); ++i) {
    itv(static_cast<py::ssize_t>(i)) = r.metrics[i].iteration;
    for (std::size_t j = 0; j < cfg.model.latent_dim; ++j) {
      klv(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j)) = r.metrics[i].kl_per_dim[j];
    }
  }
  py::dict out;
  out["iteration"] = it;
  out["beta"] = column(r.metrics, &MetricsRow::beta);
  out["recon"] = column(r.metrics, &MetricsRow::recon);
  out["rate"] = column(r.metrics, &MetricsRow::rate);
  out["total"] = column(r.metrics, &MetricsRow::total);
  out["fitness"] = column(r.metrics, &MetricsRow::fitness);
  out["kl_per_dim"] = kl;
  out["candidate_evaluations"] = r.candidate_evaluations;
  out["vga_events"] = r.events.size();
  out["checkpoint_hash"] = hex64(save_checkpoint(r.final_state).hash);
  return out;
}

}  // namespace

PYBIND11_MODULE(_evae, m) {
  m.doc() = "VAE training with an evolving KL weight: core operations";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<SpecificationError>(m, "SpecificationError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<IntegrityError>(m, "IntegrityError", PyExc_RuntimeError);

  // VGA operators.
  m.def("sample_rc", &vga::sample_rc, py::arg("u"), py::arg("eta") = 2.0,
        "SBX spread factor for a uniform draw u in [0, 1).");
  m.def("crossover", &vga::crossover, py::arg("parent_prev"), py::arg("parent_cur"),
        py::arg("r_c"), "Unclamped SBX children (a, b).");
  m.def(
      "mutate_with",
      [](double beta, double r_m, double scale, double lo, double hi) {
        vga::VgaConfig c;
        c.beta_min = lo;
        c.beta_max = hi;
        return vga::mutate_with(beta, r_m, scale, c);
      },
      py::arg("beta"), py::arg("r_m"), py::arg("scale") = 1.0, py::arg("beta_min") = 1e-4,
      py::arg("beta_max") = 100.0);
  m.def(
      "fitness",
      [](double elbo_next, double elbo_cur, double kl_next, double set_point) {
        vga::VgaConfig c;
        c.set_point = set_point;
        return vga::fitness(elbo_next, elbo_cur, kl_next, c);
      },
      py::arg("elbo_next"), py::arg("elbo_cur"), py::arg("kl_next"), py::arg("set_point") = 10.0,
      "(elbo_next - elbo_cur) + |kl_next - set_point|; lower is fitter.");

  py::class_<vga::VgaDriver>(m, "VgaDriver",
                             "Outer evolutionary loop over beta with a Python evaluator.\n\n"
                             "The evaluator is called as evaluator(beta) and returns\n"
                             "(elbo_next, elbo_cur, kl_next).")
      .def(py::init([](std::size_t population, double set_point, double pr_m, double pr_c,
                       std::uint64_t seed, bool swap_gates) {
             vga::VgaConfig c;
             c.population = population;
             c.set_point = set_point;
             c.pr_m = pr_m;
             c.pr_c = pr_c;
             if (swap_gates) c.gate_order = vga::GateOrder::swapped;
             return vga::VgaDriver(c, Rng(seed));
           }),
           py::arg("population") = 20, py::arg("set_point") = 10.0, py::arg("pr_m") = 0.001,
           py::arg("pr_c") = 0.04, py::arg("seed") = 1, py::arg("swap_gates") = false)
      .def(
          "initialize",
          [](vga::VgaDriver& d, const std::function<py::tuple(double)>& f) {
            d.initialize(
                [&](double beta, std::size_t) {
                  auto t = f(beta);
                  return vga::TrialOutcome{t[0].cast<double>(), t[1].cast<double>(),
                                           t[2].cast<double>()};
                },
                0);
          },
          py::arg("evaluator"))
      .def(
          "step",
          [](vga::VgaDriver& d, const std::function<py::tuple(double)>& f, std::uint64_t it) {
            auto log = d.step(
                [&](double beta, std::size_t) {
                  auto t = f(beta);
                  return vga::TrialOutcome{t[0].cast<double>(), t[1].cast<double>(),
                                           t[2].cast<double>()};
                },
                it);
            std::vector<std::string> actions;
            for (const auto& e : log) actions.push_back(e.action);
            return actions;
          },
          py::arg("evaluator"), py::arg("iteration") = 0)
      .def_property_readonly("applied_beta", &vga::VgaDriver::applied_beta)
      .def_property_readonly("generations", &vga::VgaDriver::generations)
      .def_property_readonly("evaluations", &vga::VgaDriver::evaluations)
      .def_property_readonly("population", [](const vga::VgaDriver& d) {
        std::vector<double> b;
        for (const auto& c : d.population().members) b.push_back(c.beta);
        return b;
      });

  // VAE quantities.
  m.def(
      "kl_per_dim",
      [](const Array& mu, const Array& log_var) {
        return kl_per_dim(LatentStats{to_tensor(mu), to_tensor(log_var)});
      },
      py::arg("mu"), py::arg("log_var"),
      "Closed-form KL to N(0, I) per latent dimension, averaged over rows.");
  m.def(
      "bernoulli_recon_loss",
      [](const Array& logits, const Array& x) { return recon_loss(to_tensor(logits), to_tensor(x)); },
      py::arg("logits"), py::arg("x"));

  // Schedules.
  m.def(
      "cost_anneal_beta",
      [](std::uint64_t t, double horizon, double beta_max) {
        auto s = sched::ScheduleState::make_cost(horizon, beta_max);
        s.t = t;
        return sched::cost_anneal_beta(s);
      },
      py::arg("t"), py::arg("horizon") = 10000.0, py::arg("beta_max") = 1.0);
  m.def(
      "cyclical_beta",
      [](std::uint64_t t, double horizon, std::size_t cycles, double ramp, double beta_max) {
        auto s = sched::ScheduleState::make_cyclical(horizon, cycles, ramp, beta_max);
        s.t = t;
        return sched::cyclical_beta(s);
      },
      py::arg("t"), py::arg("horizon") = 10000.0, py::arg("cycles") = 8, py::arg("ramp") = 0.5,
      py::arg("beta_max") = 1.0);
  py::class_<sched::ScheduleState>(m, "PidController")
      .def(py::init([](double kp, double ki, double kd, double set_point, double beta_init,
                       double beta_max) {
             return sched::ScheduleState::make_pid({kp, ki, kd, set_point, beta_init, beta_max});
           }),
           py::arg("kp") = 0.01, py::arg("ki") = 1e-4, py::arg("kd") = 0.0,
           py::arg("set_point") = 3.0, py::arg("beta_init") = 1.0, py::arg("beta_max") = 100.0)
      .def("step", &sched::pid_step, py::arg("kl"), "Feed one KL observation, get the next beta.")
      .def_property_readonly("beta", [](const sched::ScheduleState& s) { return s.last_beta; });

  // Sprites.
  m.def(
      "render_sprite",
      [](const std::string& shape, double scale, double orientation, double pos_x, double pos_y,
         std::size_t canvas) {
        data::Shape sh = shape == "square"    ? data::Shape::square
                         : shape == "ellipse" ? data::Shape::ellipse
                         : shape == "heart"   ? data::Shape::heart
                                              : throw py::value_error("unknown shape " + shape);
        data::Image img = data::render_sprite({sh, scale, orientation, pos_x, pos_y}, canvas);
        py::array_t<std::uint8_t> out({img.side, img.side});
        std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
        return out;
      },
      py::arg("shape"), py::arg("scale") = 0.3, py::arg("orientation") = 0.0,
      py::arg("pos_x") = 0.5, py::arg("pos_y") = 0.5, py::arg("canvas") = 32);
  m.def(
      "generate_dataset",
      [](std::size_t canvas, std::size_t scales, std::size_t orientations,
         std::size_t positions) {
        data::DatasetConfig c;
        c.canvas = canvas;
        c.scales = scales;
        c.orientations = orientations;
        c.positions_x = c.positions_y = positions;
        const data::Dataset ds = data::generate_dataset(c);
        const auto n = static_cast<py::ssize_t>(ds.size());
        const auto side = static_cast<py::ssize_t>(canvas);
        py::array_t<std::uint8_t> images({n, side, side});
        py::array_t<std::uint16_t> labels({n, py::ssize_t{5}});
        auto lv = labels.mutable_unchecked<2>();
        std::uint8_t* px = images.mutable_data();
        for (std::size_t i = 0; i < ds.size(); ++i) {
          const auto& img = ds.image(i);
          std::copy(img.pixels.begin(), img.pixels.end(), px + i * canvas * canvas);
          const auto& l = ds.label(i);
          const auto r = static_cast<py::ssize_t>(i);
          lv(r, 0) = l.shape;
          lv(r, 1) = l.scale;
          lv(r, 2) = l.orientation;
          lv(r, 3) = l.pos_x;
          lv(r, 4) = l.pos_y;
        }
        return py::make_tuple(images, labels, git_blob_hash(ds.serialize()));
      },
      py::arg("canvas") = 32, py::arg("scales") = 4, py::arg("orientations") = 8,
      py::arg("positions") = 8,
      "Returns (images[n, side, side], labels[n, 5], content hash).");

  // End to end.
  m.def("run", &run, py::arg("config"), py::arg("seed") = py::none(),
        py::arg("controller") = py::none(),
        "Train per a config file or preset name; returns metrics as arrays.");
  m.def(
      "git_blob_hash", [](const py::bytes& b) { return git_blob_hash(std::string(b)); },
      py::arg("content"));
}
