#pragma once

#include "admmrate/engine.hpp"
#include "admmrate/objectives.hpp"
#include "admmrate/rate.hpp"
#include "admmrate/topology.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace admmrate {

/// One experiment, read from a single JSON document.
///
///   {
///     "seed": 7,
///     "topology":  {"kind": "ring", "n_agents": 20},
///     "objective": {"kind": "uniform_quadratic", "sigma2": 16},
///     "dim": 1,
///     "rho": 16,                       // or "rho_grid": [...] /
///     "rho_range": {"min": 1, "max": 256, "points": 64, "spacing": "log"},
///     "max_iters": 2000, "stop_tol": 1e-12,
///     "init": {"kind": "random", "seed": 3, "scale": 1.0},
///     "form": "matrix",
///     "fit_window": [0.5, 0.9],
///     "outputs": {"trajectory": "traj.csv", "report": "rate.json"}
///   }
///
/// Topology kinds: centralized, ring (optionally "ring_sizes" for sweeps),
/// edges ("edges": [[a, b], ...]), components ("components": [[...], ...]),
/// rgg ("radius", "seed", "max_retries") and file ("path").
/// Objective kinds: quadratic and exponential (the randomized experiment
/// families), uniform_quadratic ("sigma2"), curvatures ("values": one
/// curvature per agent), custom ("agents": objective list) and file ("path").
/// Init kinds: zero, random, consensus (optional "x", default x*), explicit
/// ("z0", "lambda0", optional "x0") and snapshot ("path").
///
/// Sub-seeds default to seed (topology), seed + 1 (objective) and
/// seed + 2 (init).
struct ExperimentConfig {
  std::uint64_t seed = 0;
  nlohmann::json topology;
  nlohmann::json objective;
  nlohmann::json init;
  int dim = 1;
  std::optional<double> rho;
  std::vector<double> rho_grid;
  double rho_min = 1e-2;
  double rho_max = 1e4;
  int rho_points = 0;  ///< grid size from rho_range, 0 when not requested
  bool log_spacing = true;
  int max_iters = 2000;
  double stop_tol = 1e-12;
  EngineForm form = EngineForm::Matrix;
  double fit_lo = 0.5;
  double fit_hi = 0.9;
  nlohmann::json outputs = nlohmann::json::object();
  /// Relative paths inside the config resolve against this directory.
  std::filesystem::path base_dir;

  std::uint64_t topology_seed() const;
  std::uint64_t objective_seed() const;
  std::uint64_t init_seed() const;
  /// Path from `outputs` resolved against base_dir, if present.
  std::optional<std::filesystem::path> output(const std::string& key) const;
};

/// Throws ConfigError on unknown kinds, missing fields or invalid values.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Replaces the top-level seed (sub-seeds given explicitly are kept).
void override_seed(ExperimentConfig& config, std::uint64_t seed);

struct BuiltTopology {
  ComponentStructure structure;
  std::optional<GeometricGraph> graph;
};

/// Builds the topology for the given ring size override (ring sweeps) or
/// the configured one. Does not check coverage or connectivity.
BuiltTopology build_topology(const ExperimentConfig& config,
                             std::optional<int> n_agents = std::nullopt);
ProblemInstance build_objectives(const ExperimentConfig& config, int n_agents);

/// Throws InvalidTopology / NotConnected with the validation summary.
void require_valid_topology(const ComponentStructure& cs);

/// Curvature sigma2 when every Hessian equals sigma2 * I.
std::optional<double> common_curvature(const std::vector<DenseMatrix>& hessians);

struct ClosedForm {
  double alpha = 0.0;
  std::string regime;  ///< low / mid / high / fallback for rings, low / high when centralized
  std::string family;  ///< centralized or ring
};

/// Closed-form rate when the topology is centralized or a ring and every
/// agent has the same curvature.
std::optional<ClosedForm> closed_form_rate(const ComponentStructure& cs,
                                           const std::vector<DenseMatrix>& hessians, double rho);

struct EmpiricalRateEstimate {
  double slope = 0.0;  ///< of log err against k
  int k_min = 0;
  int k_max = 0;
  double residual = 0.0;  ///< RMS of the fit residuals
  double alpha_empirical = 0.0;
  bool degenerate = false;
  std::string reason;
};

/// Least-squares line through (k, log err_k) for k in
/// [ceil(lo * k_end), floor(hi * k_end)], where k_end is the last iteration.
EmpiricalRateEstimate fit_empirical_rate(const std::vector<double>& errors, int first_k = 1,
                                         double lo = 0.5, double hi = 0.9);

struct RateResult {
  RateReport report;
  std::optional<ClosedForm> closed_form;
};

struct SweepRow {
  int n_agents = 0;
  double rho = 0.0;
  double alpha_general = 0.0;
  std::optional<double> alpha_closed_form;
  std::string regime;
};

struct RunResult {
  Trajectory trajectory;
  EmpiricalRateEstimate fit;
  double alpha_theory = 0.0;
};

struct OptimalRhoResult {
  RhoOptimum optimum;
  std::optional<double> rho_closed_form;
  std::optional<double> alpha_closed_form;
};

/// Rate analysis at config.rho.
RateResult evaluate_rate(const ExperimentConfig& config);
/// One row per grid point (and per ring size when ring_sizes is given), in
/// input order.
std::vector<SweepRow> evaluate_sweep(const ExperimentConfig& config);
RunResult run_experiment(const ExperimentConfig& config);
OptimalRhoResult find_optimal_rho(const ExperimentConfig& config);

/// Grid from rho_grid, or from rho_range when points is given.
std::vector<double> rho_values(const ExperimentConfig& config);

/// Header `rho,alpha_general,alpha_closed_form,regime`, preceded by
/// `n_agents` when `with_sizes` is set. Missing closed forms are empty
/// fields.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool with_sizes);
std::vector<SweepRow> read_sweep_csv(std::istream& in);

/// Front ends used by the command line tool. Each writes its main artifact
/// to `out` (or the matching `outputs` entry) and a short summary to
/// `console`.
RateResult cmd_rate(const ExperimentConfig& config, const std::optional<std::filesystem::path>& out,
                    std::ostream& console);
std::vector<SweepRow> cmd_sweep(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out,
                                std::ostream& console);
RunResult cmd_run(const ExperimentConfig& config, const std::optional<std::filesystem::path>& out,
                  std::ostream& console);
OptimalRhoResult cmd_optimal_rho(const ExperimentConfig& config,
                                 const std::optional<std::filesystem::path>& out,
                                 std::ostream& console);
BuiltTopology cmd_gen_topology(const ExperimentConfig& config,
                               const std::optional<std::filesystem::path>& out,
                               std::ostream& console);

}  // namespace admmrate
