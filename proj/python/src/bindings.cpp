#include "admmrate/engine.hpp"
#include "admmrate/error.hpp"
#include "admmrate/experiments.hpp"
#include "admmrate/rate.hpp"
#include "admmrate/topology.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace admmrate;

namespace {

ProblemInstance as_instance(const std::vector<Objective>& fs) {
  if (fs.empty()) throw InvalidObjective("objective list is empty");
  return ProblemInstance(fs, fs.front().dim());
}

py::dict report_dict(const RateReport& r) {
  py::dict d;
  d["rho"] = r.rho;
  d["alpha"] = r.alpha;
  d["alpha_filtered"] = r.alpha_filtered;
  d["dim_kernel"] = r.dim_kernel;
  d["tight"] = r.tight;
  d["tightness_value"] = r.tightness_value;
  d["tightness_note"] = r.tightness_note;
  d["spectrum"] = r.spectrum;
  d["Q"] = r.Q;
  d["R"] = r.R;
  if (r.zeta_star.size()) d["zeta_star"] = r.zeta_star;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exact linear rate of distributed ADMM for consensus problems";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  (void)validation;

  py::class_<ComponentStructure>(m, "ComponentStructure")
      .def(py::init<int, int, std::vector<std::vector<int>>>(), py::arg("n_agents"),
           py::arg("dim"), py::arg("components"))
      .def_property_readonly("n_agents", &ComponentStructure::n_agents)
      .def_property_readonly("dim", &ComponentStructure::dim)
      .def_property_readonly("n_components", &ComponentStructure::n_components)
      .def_property_readonly("total_size", &ComponentStructure::total_size)
      .def_property_readonly("components", &ComponentStructure::components)
      .def("is_edge_clustering", &ComponentStructure::is_edge_clustering)
      .def("__repr__", [](const ComponentStructure& cs) {
        return "<ComponentStructure N=" + std::to_string(cs.n_agents()) +
               " L=" + std::to_string(cs.n_components()) + ">";
      });

  m.def("centralized", &centralized, py::arg("n_agents"), py::arg("dim") = 1);
  m.def("ring", &ring, py::arg("n_agents"), py::arg("dim") = 1);
  m.def("from_edges", &from_edges, py::arg("edges"), py::arg("n_agents"), py::arg("dim") = 1);
  m.def(
      "random_geometric_graph",
      [](int n, double radius, std::uint64_t seed, int max_retries) {
        const auto g = random_geometric_graph(n, radius, seed, max_retries);
        return py::make_tuple(g.edges, g.points, g.seed);
      },
      py::arg("n_agents"), py::arg("radius"), py::arg("seed"), py::arg("max_retries") = 100,
      "Returns (edges, points, seed) of the first connected sample.");
  m.def(
      "validate",
      [](const ComponentStructure& cs) {
        const auto r = validate(cs);
        return py::make_tuple(r.ok(), r.summary());
      },
      "Returns (ok, summary).");
  m.def(
      "mixing_matrices",
      [](const ComponentStructure& cs) {
        const auto mm = mixing_matrices(cs);
        return py::make_tuple(mm.S, mm.M, mm.Pi, mm.P);
      },
      "Returns (S, M, Pi, P).");

  py::class_<Objective>(m, "Objective")
      .def_static("quadratic", &Objective::quadratic, py::arg("phi"), py::arg("c"),
                  py::arg("d") = 0.0)
      .def_static("exponential", &Objective::exponential, py::arg("beta"))
      .def_static("scaled_square", &Objective::scaled_square, py::arg("a"), py::arg("b"))
      .def_property_readonly("dim", &Objective::dim)
      .def_property_readonly("kind", &Objective::kind_name)
      .def("value", &Objective::value)
      .def("gradient", &Objective::gradient)
      .def("hessian", &Objective::hessian);
  m.def("prox", &prox, py::arg("f"), py::arg("t"), py::arg("v"));
  m.def(
      "sample_objectives",
      [](const std::string& kind, int n, std::uint64_t seed) {
        ExperimentObjectiveKind k;
        if (kind == "quadratic") {
          k = ExperimentObjectiveKind::Quadratic;
        } else if (kind == "exponential") {
          k = ExperimentObjectiveKind::Exponential;
        } else {
          throw ConfigError("unknown objective family '" + kind + "'");
        }
        return sample_experiment_objectives(k, n, seed).oracles;
      },
      py::arg("kind"), py::arg("n_agents"), py::arg("seed"));
  m.def(
      "minimizer",
      [](const std::vector<Objective>& fs) {
        const auto r = solve_consensus_minimizer(as_instance(fs));
        return py::make_tuple(r.x_star, r.hessians);
      },
      "Returns (x_star, hessians at x_star).");

  m.def("build_Q", &build_Q, py::arg("cs"), py::arg("hessians"), py::arg("rho"));
  m.def("build_R", &build_R, py::arg("cs"), py::arg("Q"));
  m.def(
      "compute_alpha",
      [](const ComponentStructure& cs, const DenseMatrix& Q) {
        return report_dict(compute_alpha(cs, Q));
      },
      py::arg("cs"), py::arg("Q"));
  m.def(
      "analyze",
      [](const ComponentStructure& cs, const std::vector<Objective>& fs, double rho) {
        return report_dict(analyze(cs, as_instance(fs), rho));
      },
      py::arg("cs"), py::arg("objectives"), py::arg("rho"),
      "alpha, spectrum, kernel dimension, tightness and fixed point at rho.");
  m.def("centralized_alpha", &centralized_alpha, py::arg("rho"), py::arg("sigma2"));
  m.def(
      "ring_alpha",
      [](double rho, double sigma2, int n) {
        const auto r = ring_alpha(rho, sigma2, n);
        return py::make_tuple(r.alpha, r.alpha_closed_form, r.regime);
      },
      py::arg("rho"), py::arg("sigma2"), py::arg("n_agents"),
      "Returns (alpha from the roots, closed form, regime).");
  m.def("ring_optimal_rho", &ring_optimal_rho, py::arg("sigma2"), py::arg("n_agents"));
  m.def("ring_optimal_alpha", &ring_optimal_alpha, py::arg("n_agents"));
  m.def(
      "optimize_rho",
      [](const ComponentStructure& cs, const std::vector<DenseMatrix>& hessians, double lo,
         double hi) {
        const auto r = optimize_rho(cs, hessians, lo, hi);
        return py::make_tuple(r.rho, r.alpha);
      },
      py::arg("cs"), py::arg("hessians"), py::arg("rho_min") = 1e-2, py::arg("rho_max") = 1e4);

  m.def(
      "run",
      [](const ComponentStructure& cs, const std::vector<Objective>& fs, double rho,
         int max_iters, double stop_tol, const std::string& form, std::uint64_t seed) {
        const auto p = as_instance(fs);
        RunOptions opt;
        opt.rho = rho;
        opt.max_iters = max_iters;
        opt.stop_tol = stop_tol;
        opt.form = engine_form_from_string(form);
        const auto x_star = solve_consensus_minimizer(p).x_star;
        const auto t = run(cs, p, x_star, opt, random_init(cs, seed));
        return t.errors;
      },
      py::arg("cs"), py::arg("objectives"), py::arg("rho"), py::arg("max_iters") = 2000,
      py::arg("stop_tol") = 1e-12, py::arg("form") = "matrix", py::arg("seed") = 0,
      "Error |x_k - 1 x*| for k = 1, 2, ... from a random start.");
  m.def(
      "fit_empirical_rate",
      [](const std::vector<double>& errors, double lo, double hi) {
        const auto f = fit_empirical_rate(errors, 1, lo, hi);
        py::dict d;
        d["alpha_empirical"] = f.alpha_empirical;
        d["slope"] = f.slope;
        d["k_min"] = f.k_min;
        d["k_max"] = f.k_max;
        d["residual"] = f.residual;
        d["degenerate"] = f.degenerate;
        d["reason"] = f.reason;
        return d;
      },
      py::arg("errors"), py::arg("lo") = 0.5, py::arg("hi") = 0.9);

  m.def(
      "rate_from_config",
      [](const std::string& text, const std::string& base_dir) {
        return report_dict(
            evaluate_rate(parse_config(nlohmann::json::parse(text), base_dir)).report);
      },
      py::arg("config_json"), py::arg("base_dir") = "",
      "Rate report for a JSON experiment config given as a string.");
}
