#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ztd/cli/commands.hpp"
#include "ztd/cli/config.hpp"
#include "ztd/error.hpp"
#include "ztd/eval.hpp"
#include "ztd/meta.hpp"
#include "ztd/pomdp.hpp"
#include "ztd/scenario_dist.hpp"
#include "ztd/spsa.hpp"

namespace py = pybind11;
using namespace ztd;

namespace {

ScenarioField field_from(const std::string& name) {
  const auto f = parse_field(name);
  if (!f) throw InvalidArgument("unknown scenario field " + name);
  return *f;
}

TrainingMode mode_from(const std::string& name) {
  if (name == "agnostic") return TrainingMode::Agnostic;
  if (name == "robust") return TrainingMode::Robust;
  throw InvalidArgument("mode must be 'agnostic' or 'robust'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Trust-threshold POMDP simulation and meta-learning";

  py::exception<Error>(m, "ZtdError", PyExc_RuntimeError);
  py::exception<ValidationError>(m, "ValidationError", m.attr("ZtdError").ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      py::set_error(py::module_::import("ztd._core").attr("ValidationError"), e.what());
    } catch (const Error& e) {
      py::set_error(py::module_::import("ztd._core").attr("ZtdError"),
                    (std::string(e.kind()) + ": " + e.what()).c_str());
    }
  });

  py::class_<Scenario>(m, "Scenario")
      .def(py::init([](double p_a_d, double p_u_d, double p_a_n, double p_u_n) {
             return Scenario{p_a_d, p_u_d, p_a_n, p_u_n};
           }),
           py::arg("p_a_d") = 0.2, py::arg("p_u_d") = 0.1, py::arg("p_a_n") = 0.8, py::arg("p_u_n") = 0.5)
      .def_readwrite("p_a_d", &Scenario::p_a_d)
      .def_readwrite("p_u_d", &Scenario::p_u_d)
      .def_readwrite("p_a_n", &Scenario::p_a_n)
      .def_readwrite("p_u_n", &Scenario::p_u_n)
      .def("in_threshold_regime", [](const Scenario& s) { return in_threshold_regime(s); })
      .def("__eq__", [](const Scenario& a, const Scenario& b) { return a == b; })
      .def("__repr__", [](const Scenario& s) {
        std::ostringstream os;
        os << "Scenario(p_a_d=" << s.p_a_d << ", p_u_d=" << s.p_u_d << ", p_a_n=" << s.p_a_n
           << ", p_u_n=" << s.p_u_n << ")";
        return os.str();
      });

  py::class_<PomdpConfig>(m, "PomdpConfig")
      .def(py::init<>())
      .def_readwrite("q_a", &PomdpConfig::q_a)
      .def_readwrite("q_u", &PomdpConfig::q_u)
      .def_readwrite("cost", &PomdpConfig::cost)
      .def_readwrite("rho", &PomdpConfig::rho)
      .def_readwrite("horizon", &PomdpConfig::horizon)
      .def_readwrite("b0_legit", &PomdpConfig::b0_legit)
      .def("validate", &PomdpConfig::validate);

  m.def(
      "belief_update",
      [](double ts, int action, int observation, const Scenario& theta, const PomdpConfig& config) {
        if (action < 0 || action > 1 || observation < 0 || observation > 1) {
          throw InvalidArgument("action and observation must be 0 or 1");
        }
        return belief_update(Belief{ts}, static_cast<Action>(action), static_cast<Observation>(observation),
                             theta, config)
            .ts;
      },
      py::arg("ts"), py::arg("action"), py::arg("observation"), py::arg("theta"), py::arg("config"),
      "Posterior trust score after taking `action` and seeing `observation` (0 reset/alert, 1 continue/no alert).");

  m.def(
      "mc_value_estimate",
      [](const Scenario& theta, const PomdpConfig& config, double tau, int n_rollouts, std::uint64_t seed) {
        const auto v = mc_value_estimate(theta, config, ThresholdPolicy{tau}, n_rollouts, Seed{seed});
        return py::make_tuple(v.mean, v.std_error, v.n);
      },
      py::arg("theta"), py::arg("config"), py::arg("tau"), py::arg("n_rollouts"), py::arg("seed"),
      "(mean, std_error, n) of the discounted cost.");

  m.def(
      "exact_value",
      [](const Scenario& theta, const PomdpConfig& config, double tau, int horizon) {
        return exact_value(theta, config, ThresholdPolicy{tau}, horizon);
      },
      py::arg("theta"), py::arg("config"), py::arg("tau"), py::arg("horizon"));

  m.def(
      "spsa_gradient",
      [](const std::function<double(double, std::uint64_t)>& objective, double tau, double eta,
         std::uint64_t seed) {
        const Objective obj = [&](double t, Seed s) { return objective(t, s.value()); };
        return spsa_gradient(obj, tau, eta, Seed{seed});
      },
      py::arg("objective"), py::arg("tau"), py::arg("eta"), py::arg("seed"),
      "Two-point SPSA estimate; `objective(tau, seed)` is called twice with the same seed.");

  m.def(
      "adapt",
      [](double tau, const Scenario& theta, const PomdpConfig& config, double eta, double gamma,
         int n_rollouts, std::uint64_t seed) {
        const auto r = adapt(tau, theta, config, eta, gamma, n_rollouts, Seed{seed});
        return py::make_tuple(r.tau_adapted, r.gradient);
      },
      py::arg("tau"), py::arg("theta"), py::arg("config"), py::arg("eta") = SpsaSchedule{}.eta_at(1),
      py::arg("gamma") = SpsaSchedule{}.gamma, py::arg("n_rollouts") = 100, py::arg("seed") = 1,
      "(tau_adapted, gradient) after one projected SPSA step.");

  m.def("simplex_project", [](const std::vector<double>& v) { return simplex_project(v); }, py::arg("v"));

  m.def(
      "sample_scaled_beta",
      [](const std::string& field, double lo, double hi, double mean, double concentration, int n,
         std::uint64_t seed, const Scenario& base) {
        const auto dist = scaled_beta_from_mean(lo, hi, mean, concentration, field_from(field), base);
        return sample_scenarios(dist, n, Seed{seed}).scenarios;
      },
      py::arg("field"), py::arg("lo"), py::arg("hi"), py::arg("mean"), py::arg("concentration") = 10.0,
      py::arg("n") = 100, py::arg("seed") = 1, py::arg("base") = Scenario{});

  m.def(
      "train",
      [](const std::vector<Scenario>& scenarios, const PomdpConfig& config, const std::string& mode,
         int n_rollouts, std::uint64_t seed, int batch_size, int max_iters, double tau_init, int stop_window,
         int jobs) {
        ScenarioSet set{scenarios, "python"};
        TrainOptions opt;
        opt.mode = mode_from(mode);
        opt.batch_size = batch_size;
        opt.max_iters = max_iters;
        opt.tau_init = tau_init;
        opt.stop_window = stop_window;
        opt.jobs = jobs;
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(set, config, opt, n_rollouts, seed);
        }
        py::list history;
        for (const auto& rec : r.state.history) history.append(py::make_tuple(rec.iter, rec.tau_meta, rec.stop_metric));
        py::dict out;
        out["tau_meta"] = r.tau_meta;
        out["converged"] = r.converged;
        out["iterations"] = r.state.t;
        out["weights"] = r.state.weights;
        out["history"] = history;
        return out;
      },
      py::arg("scenarios"), py::arg("config"), py::arg("mode") = "agnostic", py::arg("n_rollouts") = 100,
      py::arg("seed") = 1, py::arg("batch_size") = 10, py::arg("max_iters") = 5000, py::arg("tau_init") = 0.5,
      py::arg("stop_window") = 3, py::arg("jobs") = 1);

  m.def(
      "optimal_threshold",
      [](const Scenario& theta, const PomdpConfig& config, double grid_step, int n_rollouts, std::uint64_t seed) {
        ThresholdChoice c;
        {
          py::gil_scoped_release release;
          c = optimal_threshold(theta, config, grid_step, n_rollouts, Seed{seed});
        }
        return py::make_tuple(c.tau, c.cost);
      },
      py::arg("theta"), py::arg("config"), py::arg("grid_step") = 0.01, py::arg("n_rollouts") = 500,
      py::arg("seed") = 1, "(tau, cost) minimizing the Monte Carlo cost on a grid.");

  m.def("spearman_correlation",
        [](const std::vector<double>& x, const std::vector<double>& y) { return spearman_correlation(x, y); },
        py::arg("x"), py::arg("y"));

  m.def(
      "config_json",
      [](const std::string& path) { return cli::serialize_config(cli::load_config(path)); },
      py::arg("path"), "Loads and validates a config file; returns it with defaults filled in, as JSON.");

  m.def(
      "config_digest", [](const std::string& path) { return cli::config_digest(cli::load_config(path)); },
      py::arg("path"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"ztd"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out;
        std::ostringstream err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a CLI subcommand in-process; returns (exit_code, stdout, stderr).");
}
