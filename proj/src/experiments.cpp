#include "admmrate/experiments.hpp"

#include "admmrate/error.hpp"
#include "admmrate/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace admmrate {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kTopologyKinds = {"centralized", "ring", "edges",
                                              "components", "rgg", "file"};
const std::set<std::string> kObjectiveKinds = {"quadratic", "exponential", "uniform_quadratic",
                                               "curvatures", "custom", "file"};
const std::set<std::string> kInitKinds = {"zero", "random", "consensus", "explicit", "snapshot"};

std::string kind_of(const json& spec, const char* what, const std::set<std::string>& allowed) {
  if (!spec.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  if (!spec.contains("kind") || !spec["kind"].is_string()) {
    throw ConfigError(std::string(what) + " needs a string \"kind\"");
  }
  const auto kind = spec["kind"].get<std::string>();
  if (!allowed.count(kind)) {
    std::string list;
    for (const auto& k : allowed) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("unknown " + std::string(what) + " kind '" + kind + "' (expected one of " +
                      list + ")");
  }
  return kind;
}

void require_field(const json& spec, const char* what, const char* key) {
  if (!spec.contains(key)) {
    throw ConfigError(std::string(what) + " of kind '" + spec["kind"].get<std::string>() +
                      "' needs \"" + key + "\"");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void require_file(const ExperimentConfig& c, const json& spec, const char* what) {
  require_field(spec, what, "path");
  const fs::path p = resolve(c.base_dir, spec["path"].get<std::string>());
  if (!fs::exists(p)) throw ConfigError(std::string(what) + " file not found: " + p.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

Vector to_vector(const json& j, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (v.empty()) throw ConfigError(std::string(what) + " must be a nonempty array");
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void open_output(std::ofstream& file, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  file.open(path);
  if (!file) throw ConfigError("cannot write " + path.string());
  file << std::setprecision(17);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream file;
  open_output(file, path);
  file << j.dump(2) << '\n';
}

std::optional<fs::path> target(const ExperimentConfig& config,
                               const std::optional<fs::path>& out, const char* key) {
  return out ? out : config.output(key);
}

bool is_centralized(const ComponentStructure& cs) {
  return cs.n_components() == 1 && cs.component_size(0) == cs.n_agents();
}

bool is_ring(const ComponentStructure& cs) {
  const int N = cs.n_agents();
  if (N < 3 || cs.n_components() != N || !cs.is_edge_clustering()) return false;
  std::set<std::pair<int, int>> expected;
  for (int n = 1; n <= N; ++n) expected.insert(std::minmax(n, n % N + 1));
  for (const auto& c : cs.components()) {
    if (!expected.count(std::minmax(c[0], c[1]))) return false;
  }
  return true;
}

InitialCondition make_init(const ExperimentConfig& config, const ComponentStructure& cs,
                           const Vector& x_star) {
  const json& spec = config.init;
  const std::string kind = spec.value("kind", "zero");
  try {
    if (kind == "zero") return zero_init(cs);
    if (kind == "random") return random_init(cs, config.init_seed(), spec.value("scale", 1.0));
    if (kind == "consensus") {
      return consensus_init(cs, spec.contains("x") ? to_vector(spec["x"], "init.x") : x_star);
    }
    if (kind == "explicit") {
      InitialCondition init;
      init.z0 = to_vector(spec.at("z0"), "init.z0");
      init.lambda0 = to_vector(spec.at("lambda0"), "init.lambda0");
      if (spec.contains("x0")) init.x0 = to_vector(spec["x0"], "init.x0");
      const int TK = cs.total_size() * cs.dim();
      if (init.z0.size() != TK || init.lambda0.size() != TK) {
        throw ConfigError("init.z0 and init.lambda0 must have T*K = " + std::to_string(TK) +
                          " entries");
      }
      return init;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed init: ") + e.what());
  }
  throw ConfigError("init kind '" + kind + "' cannot be used here");
}

struct Prepared {
  BuiltTopology topology;
  ProblemInstance instance;
  ConsensusMinimizer minimizer;
};

Prepared prepare(const ExperimentConfig& config, std::optional<int> n_agents = std::nullopt) {
  BuiltTopology topo = build_topology(config, n_agents);
  require_valid_topology(topo.structure);
  ProblemInstance instance = build_objectives(config, topo.structure.n_agents());
  ConsensusMinimizer mini = solve_consensus_minimizer(instance);
  return {std::move(topo), std::move(instance), std::move(mini)};
}

double require_rho(const ExperimentConfig& config, const char* command) {
  if (!config.rho) throw ConfigError(std::string(command) + " needs \"rho\" in the config");
  return *config.rho;
}

}  // namespace

// ---------------------------------------------------------------------------

std::uint64_t ExperimentConfig::topology_seed() const {
  return topology.is_object() && topology.contains("seed") ? topology["seed"].get<std::uint64_t>()
                                                           : seed;
}

std::uint64_t ExperimentConfig::objective_seed() const {
  return objective.is_object() && objective.contains("seed")
             ? objective["seed"].get<std::uint64_t>()
             : seed + 1;
}

std::uint64_t ExperimentConfig::init_seed() const {
  return init.is_object() && init.contains("seed") ? init["seed"].get<std::uint64_t>() : seed + 2;
}

std::optional<fs::path> ExperimentConfig::output(const std::string& key) const {
  if (!outputs.is_object() || !outputs.contains(key)) return std::nullopt;
  return resolve(base_dir, outputs[key].get<std::string>());
}

ExperimentConfig parse_config(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.base_dir = base_dir;
  try {
    c.seed = j.value("seed", std::uint64_t{0});
    c.dim = j.value("dim", 1);
    if (c.dim < 1) throw ConfigError("dim must be at least 1");

    if (!j.contains("topology")) throw ConfigError("config needs a \"topology\" section");
    c.topology = j["topology"];
    const std::string topo = kind_of(c.topology, "topology", kTopologyKinds);
    if (topo == "centralized" || topo == "rgg") require_field(c.topology, "topology", "n_agents");
    if (topo == "ring" && !c.topology.contains("ring_sizes")) {
      require_field(c.topology, "topology", "n_agents");
    }
    if (topo == "ring" && c.topology.contains("ring_sizes")) {
      const auto sizes = c.topology["ring_sizes"].get<std::vector<int>>();
      if (sizes.empty()) throw ConfigError("topology.ring_sizes must be nonempty");
      for (int n : sizes) {
        if (n < 3) throw ConfigError("ring sizes must be at least 3");
      }
    }
    if (topo == "edges") require_field(c.topology, "topology", "edges");
    if (topo == "components") {
      require_field(c.topology, "topology", "components");
      require_field(c.topology, "topology", "n_agents");
    }
    if (topo == "rgg") require_field(c.topology, "topology", "radius");
    if (topo == "file") require_file(c, c.topology, "topology");

    if (!j.contains("objective")) throw ConfigError("config needs an \"objective\" section");
    c.objective = j["objective"];
    const std::string obj = kind_of(c.objective, "objective", kObjectiveKinds);
    if ((obj == "quadratic" || obj == "exponential") && c.dim != 1) {
      throw ConfigError("objective kind '" + obj + "' is scalar; dim must be 1");
    }
    if (obj == "uniform_quadratic") {
      require_field(c.objective, "objective", "sigma2");
      if (!(c.objective["sigma2"].get<double>() > 0.0)) {
        throw ConfigError("objective.sigma2 must be positive");
      }
    }
    if (obj == "curvatures") {
      require_field(c.objective, "objective", "values");
      const auto values = c.objective["values"].get<std::vector<double>>();
      if (values.empty()) throw ConfigError("objective.values must be nonempty");
      for (double v : values) {
        if (!(v >= 0.0)) throw ConfigError("curvatures must be nonnegative");
      }
    }
    if (obj == "custom") require_field(c.objective, "objective", "agents");
    if (obj == "file") require_file(c, c.objective, "objective");

    c.init = j.value("init", json{{"kind", "zero"}});
    const std::string init = kind_of(c.init, "init", kInitKinds);
    if (init == "explicit") {
      require_field(c.init, "init", "z0");
      require_field(c.init, "init", "lambda0");
    }
    if (init == "snapshot") require_file(c, c.init, "init");
    if (init == "random" && !(c.init.value("scale", 1.0) > 0.0)) {
      throw ConfigError("init.scale must be positive");
    }

    if (j.contains("rho")) {
      c.rho = j["rho"].get<double>();
      if (!(*c.rho > 0.0) || !std::isfinite(*c.rho)) throw ConfigError("rho must be positive");
    }
    if (j.contains("rho_grid")) {
      c.rho_grid = j["rho_grid"].get<std::vector<double>>();
      if (c.rho_grid.empty()) throw ConfigError("rho_grid must be nonempty");
      for (double r : c.rho_grid) {
        if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("rho_grid values must be positive");
      }
    }
    if (j.contains("rho_range")) {
      const json& r = j["rho_range"];
      c.rho_min = r.at("min").get<double>();
      c.rho_max = r.at("max").get<double>();
      if (!(c.rho_min > 0.0) || !(c.rho_max > c.rho_min) || !std::isfinite(c.rho_max)) {
        throw ConfigError("rho_range must satisfy 0 < min < max");
      }
      c.rho_points = r.value("points", 0);
      if (c.rho_points < 0 || c.rho_points == 1) {
        throw ConfigError("rho_range.points must be 0 or at least 2");
      }
      const std::string spacing = r.value("spacing", "log");
      if (spacing != "log" && spacing != "linear") {
        throw ConfigError("rho_range.spacing must be log or linear");
      }
      c.log_spacing = spacing == "log";
    }

    c.max_iters = j.value("max_iters", 2000);
    if (c.max_iters < 1) throw ConfigError("max_iters must be at least 1");
    c.stop_tol = j.value("stop_tol", 1e-12);
    if (!(c.stop_tol >= 0.0)) throw ConfigError("stop_tol must be nonnegative");
    c.form = engine_form_from_string(j.value("form", "matrix"));
    if (j.contains("fit_window")) {
      const auto w = j["fit_window"].get<std::vector<double>>();
      if (w.size() != 2 || !(w[0] >= 0.0) || !(w[1] > w[0]) || !(w[1] <= 1.0)) {
        throw ConfigError("fit_window must be [lo, hi] with 0 <= lo < hi <= 1");
      }
      c.fit_lo = w[0];
      c.fit_hi = w[1];
    }
    if (j.contains("outputs")) {
      c.outputs = j["outputs"];
      if (!c.outputs.is_object()) throw ConfigError("outputs must be an object");
      for (const auto& [key, value] : c.outputs.items()) {
        if (!value.is_string()) throw ConfigError("outputs." + key + " must be a path string");
      }
    }
    // Touch the seed accessors so malformed seeds fail here.
    (void)c.topology_seed();
    (void)c.objective_seed();
    (void)c.init_seed();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  return parse_config(read_json(path), path.parent_path());
}

void override_seed(ExperimentConfig& config, std::uint64_t seed) { config.seed = seed; }

BuiltTopology build_topology(const ExperimentConfig& config, std::optional<int> n_agents) {
  const json& spec = config.topology;
  const std::string kind = spec.at("kind").get<std::string>();
  const int dim = config.dim;
  try {
    auto count = [&] { return n_agents ? *n_agents : spec.at("n_agents").get<int>(); };
    if (kind == "centralized") return {centralized(count(), dim), std::nullopt};
    if (kind == "ring") return {ring(count(), dim), std::nullopt};
    if (kind == "components") {
      return {ComponentStructure(count(), dim,
                                 spec.at("components").get<std::vector<std::vector<int>>>()),
              std::nullopt};
    }
    if (kind == "edges") {
      EdgeList edges;
      int highest = 0;
      for (const auto& e : spec.at("edges")) {
        edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        highest = std::max({highest, edges.back().first, edges.back().second});
      }
      const int N = spec.contains("n_agents") ? count() : n_agents.value_or(highest);
      return {from_edges(edges, N, dim), std::nullopt};
    }
    if (kind == "rgg") {
      GeometricGraph g = random_geometric_graph(count(), spec.at("radius").get<double>(),
                                                config.topology_seed(),
                                                spec.value("max_retries", 100));
      ComponentStructure cs = from_edges(g.edges, count(), dim);
      return {std::move(cs), std::move(g)};
    }
    // kind == "file"
    const json j = read_json(resolve(config.base_dir, spec.at("path").get<std::string>()));
    if (j.contains("components")) {
      if (j.contains("dim") && j["dim"].get<int>() != dim) {
        throw ConfigError("topology file dimension differs from config dim");
      }
      return {ComponentStructure(j.at("n_agents").get<int>(), dim,
                                 j.at("components").get<std::vector<std::vector<int>>>()),
              std::nullopt};
    }
    std::optional<GeometricGraph> g;
    EdgeList edges;
    int N = 0;
    if (j.contains("points")) {
      g = geometric_graph_from_json(j);
      edges = g->edges;
      N = static_cast<int>(g->points.size());
    } else {
      for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    }
    N = j.value("n_agents", N);
    return {from_edges(edges, N, dim), std::move(g)};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed topology spec: ") + e.what());
  }
}

ProblemInstance build_objectives(const ExperimentConfig& config, int n_agents) {
  const json& spec = config.objective;
  const std::string kind = spec.at("kind").get<std::string>();
  const int K = config.dim;
  try {
    if (kind == "quadratic") {
      return sample_experiment_objectives(ExperimentObjectiveKind::Quadratic, n_agents,
                                          config.objective_seed());
    }
    if (kind == "exponential") {
      return sample_experiment_objectives(ExperimentObjectiveKind::Exponential, n_agents,
                                          config.objective_seed());
    }
    if (kind == "uniform_quadratic" || kind == "curvatures") {
      std::vector<double> curv;
      if (kind == "curvatures") {
        curv = spec.at("values").get<std::vector<double>>();
        if (static_cast<int>(curv.size()) != n_agents) {
          throw ConfigError("objective.values has " + std::to_string(curv.size()) +
                            " entries for " + std::to_string(n_agents) + " agents");
        }
      } else {
        curv.assign(n_agents, spec.at("sigma2").get<double>());
      }
      // f_n(x) = (s_n / 2) |x - b_n|^2 with centers b_n ~ N(5, 10^2) unless given.
      std::vector<Vector> centers;
      if (spec.contains("centers")) {
        const auto& jc = spec["centers"];
        if (static_cast<int>(jc.size()) != n_agents) {
          throw ConfigError("objective.centers needs one entry per agent");
        }
        for (const auto& c : jc) {
          Vector b = c.is_number() ? Vector::Constant(1, c.get<double>()) : to_vector(c, "center");
          if (b.size() != K) throw ConfigError("objective.centers entries must have length dim");
          centers.push_back(b);
        }
      } else {
        Rng rng(config.objective_seed());
        for (int n = 0; n < n_agents; ++n) {
          Vector b(K);
          for (int i = 0; i < K; ++i) b[i] = rng.gaussian(5.0, 10.0);
          centers.push_back(b);
        }
      }
      std::vector<Objective> oracles;
      for (int n = 0; n < n_agents; ++n) {
        oracles.push_back(Objective::quadratic(curv[n] * DenseMatrix::Identity(K, K),
                                               -curv[n] * centers[n],
                                               0.5 * curv[n] * centers[n].squaredNorm()));
      }
      return ProblemInstance(std::move(oracles), K);
    }
    ProblemInstance p =
        kind == "custom"
            ? problem_instance_from_json(spec.at("agents"))
            : problem_instance_from_json(
                  read_json(resolve(config.base_dir, spec.at("path").get<std::string>())));
    if (p.n_agents() != n_agents) {
      throw ConfigError("objective list has " + std::to_string(p.n_agents()) + " agents, topology has " +
                        std::to_string(n_agents));
    }
    if (p.dim != K) throw ConfigError("objective dimension differs from config dim");
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed objective spec: ") + e.what());
  }
}

void require_valid_topology(const ComponentStructure& cs) {
  const ValidationReport report = validate(cs);
  if (!report.covered) throw InvalidTopology("invalid topology: " + report.summary());
  if (!report.connected) throw NotConnected("invalid topology: " + report.summary());
}

std::optional<double> common_curvature(const std::vector<DenseMatrix>& hessians) {
  if (hessians.empty()) return std::nullopt;
  const Eigen::Index K = hessians.front().rows();
  const double sigma2 = hessians.front()(0, 0);
  if (!(sigma2 > 0.0)) return std::nullopt;
  const DenseMatrix target = sigma2 * DenseMatrix::Identity(K, K);
  for (const auto& h : hessians) {
    if (h.rows() != K || (h - target).lpNorm<Eigen::Infinity>() > 1e-12 * sigma2) {
      return std::nullopt;
    }
  }
  return sigma2;
}

std::optional<ClosedForm> closed_form_rate(const ComponentStructure& cs,
                                           const std::vector<DenseMatrix>& hessians, double rho) {
  const auto sigma2 = common_curvature(hessians);
  if (!sigma2) return std::nullopt;
  if (is_centralized(cs)) {
    return ClosedForm{centralized_alpha(rho, *sigma2), rho <= *sigma2 ? "low" : "high",
                      "centralized"};
  }
  if (is_ring(cs)) {
    ClosedForm out;
    out.family = "ring";
    out.alpha = ring_closed_form(rho, *sigma2, cs.n_agents(), &out.regime);
    return out;
  }
  return std::nullopt;
}

EmpiricalRateEstimate fit_empirical_rate(const std::vector<double>& errors, int first_k,
                                         double lo, double hi) {
  EmpiricalRateEstimate est;
  auto reject = [&](const std::string& reason) {
    est.degenerate = true;
    est.reason = reason;
    est.alpha_empirical = std::nan("");
    est.slope = std::nan("");
    return est;
  };
  if (errors.empty()) return reject("empty trajectory");
  const int k_end = first_k + static_cast<int>(errors.size()) - 1;
  est.k_min = std::max(first_k, static_cast<int>(std::ceil(lo * k_end)));
  est.k_max = std::min(k_end, static_cast<int>(std::floor(hi * k_end)));
  if (est.k_max - est.k_min + 1 < 3) {
    return reject("fit window [" + std::to_string(est.k_min) + ", " + std::to_string(est.k_max) +
                  "] holds fewer than three iterations");
  }
  std::vector<double> ks;
  std::vector<double> ys;
  double largest = 0.0;
  for (int k = est.k_min; k <= est.k_max; ++k) {
    const double e = errors[k - first_k];
    if (!(e > 0.0) || !std::isfinite(e)) return reject("error is zero or non-finite in the window");
    largest = std::max(largest, e);
    ks.push_back(k);
    ys.push_back(std::log(e));
  }
  if (largest < 1e-14) return reject("errors are at the floating-point floor");

  const double n = static_cast<double>(ks.size());
  double kbar = 0.0;
  double ybar = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    kbar += ks[i];
    ybar += ys[i];
  }
  kbar /= n;
  ybar /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    sxy += (ks[i] - kbar) * (ys[i] - ybar);
    sxx += (ks[i] - kbar) * (ks[i] - kbar);
  }
  est.slope = sxy / sxx;
  double ss = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double r = ys[i] - (ybar + est.slope * (ks[i] - kbar));
    ss += r * r;
  }
  est.residual = std::sqrt(ss / n);
  est.alpha_empirical = std::exp(est.slope);
  return est;
}

std::vector<double> rho_values(const ExperimentConfig& config) {
  if (!config.rho_grid.empty()) return config.rho_grid;
  if (config.rho_points >= 2) {
    std::vector<double> grid(config.rho_points);
    for (int i = 0; i < config.rho_points; ++i) {
      const double t = static_cast<double>(i) / (config.rho_points - 1);
      grid[i] = config.log_spacing
                    ? config.rho_min * std::pow(config.rho_max / config.rho_min, t)
                    : config.rho_min + t * (config.rho_max - config.rho_min);
    }
    grid.front() = config.rho_min;
    grid.back() = config.rho_max;
    return grid;
  }
  if (config.rho) return {*config.rho};
  throw ConfigError("sweep needs \"rho_grid\" or \"rho_range\" with \"points\"");
}

RateResult evaluate_rate(const ExperimentConfig& config) {
  const double rho = require_rho(config, "rate");
  const Prepared p = prepare(config);
  RateResult out;
  out.report = analyze(p.topology.structure, p.instance, rho, p.minimizer);
  out.closed_form = closed_form_rate(p.topology.structure, p.minimizer.hessians, rho);
  return out;
}

std::vector<SweepRow> evaluate_sweep(const ExperimentConfig& config) {
  const std::vector<double> grid = rho_values(config);
  std::vector<std::optional<int>> sizes{std::nullopt};
  if (config.topology.value("kind", "") == "ring" && config.topology.contains("ring_sizes")) {
    sizes.clear();
    for (int n : config.topology["ring_sizes"].get<std::vector<int>>()) sizes.push_back(n);
  }
  std::vector<SweepRow> rows;
  for (const auto& size : sizes) {
    const Prepared p = prepare(config, size);
    const auto& cs = p.topology.structure;
    for (double rho : grid) {
      const DenseMatrix Q = build_Q(cs, p.minimizer.hessians, rho);
      SweepRow row;
      row.n_agents = cs.n_agents();
      row.rho = rho;
      row.alpha_general = compute_alpha(cs, Q).alpha;
      if (const auto cf = closed_form_rate(cs, p.minimizer.hessians, rho)) {
        row.alpha_closed_form = cf->alpha;
        row.regime = cf->regime;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

RunResult run_experiment(const ExperimentConfig& config) {
  const double rho = require_rho(config, "run");
  const Prepared p = prepare(config);
  const auto& cs = p.topology.structure;
  RunResult out;
  out.alpha_theory = analyze(cs, p.instance, rho, p.minimizer).alpha;

  RunOptions options;
  options.rho = rho;
  options.max_iters = config.max_iters;
  options.stop_tol = config.stop_tol;
  options.form = config.form;
  if (config.init.value("kind", "zero") == "snapshot") {
    if (config.form != EngineForm::Matrix) {
      throw ConfigError("snapshot initialization requires the matrix form");
    }
    const AdmmState state = admm_state_from_json(
        read_json(resolve(config.base_dir, config.init["path"].get<std::string>())));
    out.trajectory = resume(cs, p.instance, p.minimizer.x_star, options, state);
  } else {
    const InitialCondition init = make_init(config, cs, p.minimizer.x_star);
    try {
      out.trajectory = run(cs, p.instance, p.minimizer.x_star, options, init);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("initial condition rejected: ") + e.what());
    }
  }
  out.fit = fit_empirical_rate(out.trajectory.errors, out.trajectory.first_k, config.fit_lo,
                               config.fit_hi);
  return out;
}

OptimalRhoResult find_optimal_rho(const ExperimentConfig& config) {
  const Prepared p = prepare(config);
  const auto& cs = p.topology.structure;
  OptimalRhoResult out;
  out.optimum = optimize_rho(cs, p.minimizer.hessians, config.rho_min, config.rho_max);
  if (const auto sigma2 = common_curvature(p.minimizer.hessians)) {
    if (is_centralized(cs)) {
      out.rho_closed_form = *sigma2;
      out.alpha_closed_form = 0.5;
    } else if (is_ring(cs)) {
      out.rho_closed_form = ring_optimal_rho(*sigma2, cs.n_agents());
      out.alpha_closed_form = ring_optimal_alpha(cs.n_agents());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool with_sizes) {
  const auto old_precision = out.precision(17);
  if (with_sizes) out << "n_agents,";
  out << "rho,alpha_general,alpha_closed_form,regime\n";
  for (const auto& r : rows) {
    if (with_sizes) out << r.n_agents << ',';
    out << r.rho << ',' << r.alpha_general << ',';
    if (r.alpha_closed_form) out << *r.alpha_closed_form;
    out << ',' << r.regime << '\n';
  }
  out.precision(old_precision);
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
  };
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("sweep CSV is empty");
  const auto header = split(line);
  const bool with_sizes = !header.empty() && header[0] == "n_agents";
  const std::size_t expected = with_sizes ? 5 : 4;
  if (header.size() != expected) throw ConfigError("unexpected sweep CSV header: " + line);

  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split(line);
    if (f.size() < expected - 1 || f.size() > expected) {
      throw ConfigError("malformed sweep CSV row: " + line);
    }
    f.resize(expected);
    std::size_t i = 0;
    SweepRow r;
    try {
      if (with_sizes) r.n_agents = std::stoi(f[i++]);
      r.rho = std::stod(f[i++]);
      r.alpha_general = std::stod(f[i++]);
      const std::string& cf = f[i++];
      if (!cf.empty()) r.alpha_closed_form = std::stod(cf);
      r.regime = f[i++];
    } catch (const std::logic_error&) {
      throw ConfigError("malformed sweep CSV row: " + line);
    }
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------

RateResult cmd_rate(const ExperimentConfig& config, const std::optional<fs::path>& out,
                    std::ostream& console) {
  RateResult result = evaluate_rate(config);
  const RateReport& r = result.report;
  console << std::setprecision(12);
  console << "alpha=" << r.alpha << '\n'
          << "rho=" << r.rho << '\n'
          << "dim_kernel=" << r.dim_kernel << '\n'
          << "tight=" << (r.tight ? "true" : "false") << '\n';
  if (!r.tightness_note.empty()) console << "tightness_note=" << r.tightness_note << '\n';
  if (result.closed_form) {
    console << "alpha_closed_form=" << result.closed_form->alpha << " ("
            << result.closed_form->family << ", " << result.closed_form->regime << ")\n";
  }
  if (const auto path = target(config, out, "report")) {
    json j = to_json(r);
    if (result.closed_form) {
      j["alpha_closed_form"] = result.closed_form->alpha;
      j["closed_form_family"] = result.closed_form->family;
      j["regime"] = result.closed_form->regime;
    }
    write_json(*path, j);
  }
  return result;
}

std::vector<SweepRow> cmd_sweep(const ExperimentConfig& config, const std::optional<fs::path>& out,
                                std::ostream& console) {
  const auto rows = evaluate_sweep(config);
  const bool with_sizes = config.topology.contains("ring_sizes");
  if (const auto path = target(config, out, "sweep")) {
    std::ofstream file;
    open_output(file, *path);
    write_sweep_csv(file, rows, with_sizes);
    console << "wrote " << rows.size() << " rows to " << path->string() << '\n';
  } else {
    write_sweep_csv(console, rows, with_sizes);
  }
  return rows;
}

RunResult cmd_run(const ExperimentConfig& config, const std::optional<fs::path>& out,
                  std::ostream& console) {
  RunResult result = run_experiment(config);
  const Trajectory& t = result.trajectory;
  console << std::setprecision(12);
  console << "iterations=" << t.iterations() << '\n'
          << "converged=" << (t.converged ? "true" : "false") << '\n'
          << "final_error=" << (t.errors.empty() ? 0.0 : t.errors.back()) << '\n'
          << "alpha_theory=" << result.alpha_theory << '\n';
  if (result.fit.degenerate) {
    console << "alpha_empirical=degenerate (" << result.fit.reason << ")\n";
  } else {
    console << "alpha_empirical=" << result.fit.alpha_empirical << '\n'
            << "fit_window=[" << result.fit.k_min << ", " << result.fit.k_max << "]\n"
            << "fit_residual=" << result.fit.residual << '\n';
  }
  if (const auto path = target(config, out, "trajectory")) {
    std::ofstream file;
    open_output(file, *path);
    write_trajectory_csv(file, t);
  }
  if (const auto path = config.output("snapshot")) {
    if (t.final_state) write_json(*path, to_json(*t.final_state));
  }
  if (const auto path = config.output("report")) {
    json j = {{"alpha_theory", result.alpha_theory},
              {"iterations", t.iterations()},
              {"converged", t.converged},
              {"degenerate", result.fit.degenerate}};
    if (!result.fit.degenerate) {
      j["alpha_empirical"] = result.fit.alpha_empirical;
      j["slope"] = result.fit.slope;
      j["k_min"] = result.fit.k_min;
      j["k_max"] = result.fit.k_max;
      j["residual"] = result.fit.residual;
    } else {
      j["reason"] = result.fit.reason;
    }
    write_json(*path, j);
  }
  return result;
}

OptimalRhoResult cmd_optimal_rho(const ExperimentConfig& config,
                                 const std::optional<fs::path>& out, std::ostream& console) {
  OptimalRhoResult result = find_optimal_rho(config);
  console << std::setprecision(12);
  console << "rho_opt=" << result.optimum.rho << '\n' << "alpha_opt=" << result.optimum.alpha << '\n';
  if (result.rho_closed_form) {
    console << "rho_closed_form=" << *result.rho_closed_form << '\n'
            << "alpha_closed_form=" << *result.alpha_closed_form << '\n';
  }
  if (const auto path = target(config, out, "report")) {
    json j = {{"rho_opt", result.optimum.rho},
              {"alpha_opt", result.optimum.alpha},
              {"evaluations", result.optimum.evaluations}};
    if (result.rho_closed_form) {
      j["rho_closed_form"] = *result.rho_closed_form;
      j["alpha_closed_form"] = *result.alpha_closed_form;
    }
    write_json(*path, j);
  }
  return result;
}

BuiltTopology cmd_gen_topology(const ExperimentConfig& config, const std::optional<fs::path>& out,
                               std::ostream& console) {
  BuiltTopology built = build_topology(config);
  const ValidationReport report = validate(built.structure);
  json j = to_json(built.structure);
  if (built.graph) {
    const json g = to_json(*built.graph);
    for (const auto& [key, value] : g.items()) j[key] = value;
    j["attempts"] = built.graph->attempts;
  }
  if (const auto path = target(config, out, "topology")) {
    write_json(*path, j);
    console << "wrote topology to " << path->string() << '\n';
  } else {
    console << j.dump(2) << '\n';
  }
  console << report.summary() << '\n';
  if (!report.ok()) require_valid_topology(built.structure);
  return built;
}

}  // namespace admmrate
