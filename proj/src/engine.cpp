#include "admmrate/engine.hpp"

#include "admmrate/error.hpp"
#include "admmrate/random.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace admmrate {

namespace {

constexpr double kInitTol = 1e-10;

void check_instance(const ComponentStructure& cs, const ProblemInstance& instance, double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("rho must be positive and finite");
  if (instance.n_agents() != cs.n_agents()) {
    throw InvalidObjective("instance has " + std::to_string(instance.n_agents()) +
                           " agents, topology has " + std::to_string(cs.n_agents()));
  }
  if (instance.dim != cs.dim()) {
    throw InvalidObjective("instance dimension " + std::to_string(instance.dim) +
                           " differs from topology dimension " + std::to_string(cs.dim()));
  }
  const ValidationReport report = validate(cs);
  if (!report.covered) throw InvalidTopology(report.summary());
  if (!report.connected) throw NotConnected(report.summary());
}

Vector segment(const Vector& v, int index, int K) { return v.segment(index * K, K); }

double tolerance_for(const Vector& v) { return kInitTol * std::max(1.0, v.lpNorm<Eigen::Infinity>()); }

/// Rejects (z0, lambda0) pairs that the agent-level algorithms cannot
/// represent: z0 must be constant on each component and lambda0 must sum to
/// zero there.
void check_agent_compatible(const ComponentStructure& cs, const InitialCondition& init) {
  const int K = cs.dim();
  const int TK = cs.total_size() * K;
  if (init.z0.size() != TK || init.lambda0.size() != TK) {
    throw std::invalid_argument("initial z0/lambda0 must have length T*K");
  }
  const double ztol = tolerance_for(init.z0);
  const double ltol = tolerance_for(init.lambda0);
  for (int l = 0; l < cs.n_components(); ++l) {
    const int off = cs.block_offset(l);
    const int size = cs.component_size(l);
    Vector sum = Vector::Zero(K);
    for (int i = 0; i < size; ++i) {
      if ((segment(init.z0, off + i, K) - segment(init.z0, off, K)).lpNorm<Eigen::Infinity>() >
          ztol) {
        throw std::invalid_argument("z0 is not constant on component " + std::to_string(l + 1));
      }
      sum += segment(init.lambda0, off + i, K);
    }
    if (sum.lpNorm<Eigen::Infinity>() > ltol * size) {
      throw std::invalid_argument("lambda0 does not sum to zero on component " +
                                  std::to_string(l + 1));
    }
  }
}

/// Delta_0(n) = (1 / (rho |sigma(n)|)) sum over l in sigma(n) of lambda0^(l)(n).
std::vector<Vector> initial_delta(const ComponentStructure& cs, const Vector& lambda0,
                                  double rho) {
  const int K = cs.dim();
  std::vector<Vector> delta(cs.n_agents(), Vector::Zero(K));
  const auto& rows = cs.row_agent();
  for (int r = 0; r < cs.total_size(); ++r) delta[rows[r]] += segment(lambda0, r, K);
  for (int n = 0; n < cs.n_agents(); ++n) {
    delta[n] /= rho * static_cast<double>(cs.memberships(n).size());
  }
  return delta;
}

std::vector<Vector> split(const Vector& v, int parts, int K) {
  std::vector<Vector> out(parts);
  for (int n = 0; n < parts; ++n) out[n] = segment(v, n, K);
  return out;
}

}  // namespace

InitialCondition zero_init(const ComponentStructure& cs) {
  const int K = cs.dim();
  return {Vector::Zero(cs.n_agents() * K), Vector::Zero(cs.total_size() * K),
          Vector::Zero(cs.total_size() * K)};
}

InitialCondition random_init(const ComponentStructure& cs, std::uint64_t seed, double scale) {
  const int K = cs.dim();
  const MixingMatrices mm = mixing_matrices(cs);
  Rng rng(seed);
  InitialCondition init;
  init.x0.resize(cs.n_agents() * K);
  for (Eigen::Index i = 0; i < init.x0.size(); ++i) init.x0[i] = rng.gaussian(0.0, scale);
  Vector g(cs.total_size() * K);
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = rng.gaussian(0.0, scale);
  init.z0 = block_average(cs, mm.M * init.x0);
  init.lambda0 = g - block_average(cs, g);
  return init;
}

InitialCondition consensus_init(const ComponentStructure& cs, const Vector& x) {
  if (x.size() != cs.dim()) throw std::invalid_argument("consensus point has wrong dimension");
  InitialCondition init;
  init.x0 = x.replicate(cs.n_agents(), 1);
  init.z0 = x.replicate(cs.total_size(), 1);
  init.lambda0 = Vector::Zero(cs.total_size() * cs.dim());
  return init;
}

// ---------------------------------------------------------------------------

MatrixFormAdmm::MatrixFormAdmm(ComponentStructure cs, ProblemInstance instance, double rho)
    : cs_(std::move(cs)), instance_(std::move(instance)), rho_(rho) {
  check_instance(cs_, instance_, rho_);
  mm_ = mixing_matrices(cs_);
  const int N = cs_.n_agents();
  const int K = cs_.dim();
  sigma_size_.resize(N);
  for (int n = 0; n < N; ++n) sigma_size_[n] = static_cast<double>(cs_.memberships(n).size());

  if (instance_.is_quadratic()) {
    DenseMatrix H = rho_ * mm_.M.transpose() * mm_.M;
    c_ = Vector::Zero(N * K);
    for (int n = 0; n < N; ++n) {
      const QuadraticObjective q = *instance_.oracles[n].quadratic_form();
      H.block(n * K, n * K, K, K) += q.phi;
      c_.segment(n * K, K) = q.c;
    }
    h_factor_.emplace(H);
    if (h_factor_->info() != Eigen::Success) throw SingularH("H is not positive definite");
  }
}

AdmmState MatrixFormAdmm::initial_state(const InitialCondition& init) const {
  const int TK = cs_.total_size() * cs_.dim();
  if (init.z0.size() != TK || init.lambda0.size() != TK) {
    throw std::invalid_argument("initial z0/lambda0 must have length T*K");
  }
  AdmmState s;
  s.x = init.x0.size() == cs_.n_agents() * cs_.dim() ? init.x0
                                                     : Vector::Zero(cs_.n_agents() * cs_.dim());
  s.z = init.z0;
  s.lambda = init.lambda0;
  s.zeta = init.lambda0 + rho_ * init.z0;
  s.k = 0;
  return s;
}

AdmmState MatrixFormAdmm::step(const AdmmState& state) const {
  const int N = cs_.n_agents();
  const int K = cs_.dim();
  const Vector v = mm_.M.transpose() * (state.z - state.lambda / rho_);

  AdmmState next;
  if (h_factor_) {
    next.x = h_factor_->solve(rho_ * v - c_);
  } else {
    next.x.resize(N * K);
    for (int n = 0; n < N; ++n) {
      const double d = sigma_size_[n];
      next.x.segment(n * K, K) =
          prox(instance_.oracles[n], 1.0 / (rho_ * d), v.segment(n * K, K) / d);
    }
  }
  next.zeta = rho_ * (mm_.M * next.x) + state.lambda;
  const Vector pz = block_average(cs_, next.zeta);
  next.z = pz / rho_;
  next.lambda = next.zeta - pz;
  next.k = state.k + 1;
  return next;
}

// ---------------------------------------------------------------------------

DistributedAdmm::DistributedAdmm(ComponentStructure cs, ProblemInstance instance, double rho)
    : cs_(std::move(cs)), instance_(std::move(instance)), rho_(rho) {
  check_instance(cs_, instance_, rho_);
}

ClusterHeads DistributedAdmm::initial_heads(const InitialCondition& init) const {
  check_agent_compatible(cs_, init);
  ClusterHeads heads;
  for (int l = 0; l < cs_.n_components(); ++l) {
    heads.zbar.push_back(segment(init.z0, cs_.block_offset(l), cs_.dim()));
  }
  return heads;
}

AgentState DistributedAdmm::initial_agents(const InitialCondition& init) const {
  const ClusterHeads heads = initial_heads(init);
  const int N = cs_.n_agents();
  const int K = cs_.dim();
  AgentState agents;
  agents.x = init.x0.size() == N * K ? split(init.x0, N, K)
                                     : std::vector<Vector>(N, Vector::Zero(K));
  agents.chi.assign(N, Vector::Zero(K));
  for (int n = 0; n < N; ++n) {
    const auto& sigma = cs_.memberships(n);
    for (int l : sigma) agents.chi[n] += heads.zbar[l];
    agents.chi[n] /= static_cast<double>(sigma.size());
  }
  agents.delta = initial_delta(cs_, init.lambda0, rho_);
  agents.k = 0;
  return agents;
}

void DistributedAdmm::step(AgentState& agents, ClusterHeads& heads) const {
  const int N = cs_.n_agents();
  const int K = cs_.dim();

  // Step 1: local prox updates.
  for (int n = 0; n < N; ++n) {
    const double d = static_cast<double>(cs_.memberships(n).size());
    agents.x[n] = prox(instance_.oracles[n], 1.0 / (rho_ * d), agents.chi[n] - agents.delta[n]);
  }

  // Step 2: cluster heads average their members.
  for (int l = 0; l < cs_.n_components(); ++l) {
    Vector sum = Vector::Zero(K);
    for (int member : cs_.components()[l]) sum += agents.x[member - 1];
    heads.zbar[l] = sum / static_cast<double>(cs_.component_size(l));
  }

  // Step 3: agents collect the means of their clusters.
  for (int n = 0; n < N; ++n) {
    const auto& sigma = cs_.memberships(n);
    Vector sum = Vector::Zero(K);
    for (int l : sigma) sum += heads.zbar[l];
    agents.chi[n] = sum / static_cast<double>(sigma.size());
    agents.delta[n] += agents.x[n] - agents.chi[n];
  }
  ++agents.k;
}

// ---------------------------------------------------------------------------

EdgeAdmm::EdgeAdmm(ComponentStructure cs, ProblemInstance instance, double rho)
    : cs_(std::move(cs)), instance_(std::move(instance)), rho_(rho) {
  if (!cs_.is_edge_clustering()) {
    throw InvalidTopology("edge form requires every component to be a distinct pair of agents");
  }
  check_instance(cs_, instance_, rho_);
  neighbours_.assign(cs_.n_agents(), {});
  for (const auto& c : cs_.components()) {
    neighbours_[c[0] - 1].push_back(c[1] - 1);
    neighbours_[c[1] - 1].push_back(c[0] - 1);
  }
}

EdgeAgentState EdgeAdmm::initial_agents(const InitialCondition& init) const {
  check_agent_compatible(cs_, init);
  const int N = cs_.n_agents();
  const int K = cs_.dim();
  if (init.x0.size() != N * K) {
    throw std::invalid_argument("edge form needs x0 with z0 = P M x0");
  }
  const MixingMatrices mm = mixing_matrices(cs_);
  const Vector expected = block_average(cs_, mm.M * init.x0);
  if ((expected - init.z0).lpNorm<Eigen::Infinity>() > tolerance_for(init.z0)) {
    throw std::invalid_argument("edge form needs z0 = P M x0");
  }
  EdgeAgentState agents;
  agents.x = split(init.x0, N, K);
  agents.xbar.assign(N, Vector::Zero(K));
  for (int n = 0; n < N; ++n) {
    for (int m : neighbours_[n]) agents.xbar[n] += agents.x[m];
    agents.xbar[n] /= static_cast<double>(neighbours_[n].size());
  }
  agents.delta = initial_delta(cs_, init.lambda0, rho_);
  agents.k = 0;
  return agents;
}

void EdgeAdmm::step(EdgeAgentState& agents) const {
  const int N = cs_.n_agents();
  const int K = cs_.dim();
  std::vector<Vector> x(N);
  for (int n = 0; n < N; ++n) {
    const double degree = static_cast<double>(neighbours_[n].size());
    x[n] = prox(instance_.oracles[n], 1.0 / (rho_ * degree),
                0.5 * (agents.x[n] + agents.xbar[n]) - agents.delta[n]);
  }
  agents.x = std::move(x);
  for (int n = 0; n < N; ++n) {
    Vector sum = Vector::Zero(K);
    for (int m : neighbours_[n]) sum += agents.x[m];
    agents.xbar[n] = sum / static_cast<double>(neighbours_[n].size());
    agents.delta[n] += 0.5 * (agents.x[n] - agents.xbar[n]);
  }
  ++agents.k;
}

// ---------------------------------------------------------------------------

AdmmState step_matrix_form(const AdmmState& state, double rho, const ProblemInstance& instance,
                           const ComponentStructure& cs) {
  return MatrixFormAdmm(cs, instance, rho).step(state);
}

AgentState step_distributed_general(const AgentState& agents, ClusterHeads& heads, double rho,
                                    const ProblemInstance& instance,
                                    const ComponentStructure& cs) {
  AgentState next = agents;
  DistributedAdmm(cs, instance, rho).step(next, heads);
  return next;
}

EdgeAgentState step_distributed_edges(const EdgeAgentState& agents, double rho,
                                      const ProblemInstance& instance,
                                      const ComponentStructure& cs) {
  EdgeAgentState next = agents;
  EdgeAdmm(cs, instance, rho).step(next);
  return next;
}

Vector stack(const std::vector<Vector>& parts) {
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.size();
  Vector out(total);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.segment(offset, p.size()) = p;
    offset += p.size();
  }
  return out;
}

EngineForm engine_form_from_string(const std::string& name) {
  if (name == "matrix") return EngineForm::Matrix;
  if (name == "distributed" || name == "general") return EngineForm::DistributedGeneral;
  if (name == "edges") return EngineForm::DistributedEdges;
  throw ConfigError("unknown engine form '" + name + "' (expected matrix, distributed or edges)");
}

std::string to_string(EngineForm form) {
  switch (form) {
    case EngineForm::Matrix:
      return "matrix";
    case EngineForm::DistributedGeneral:
      return "distributed";
    case EngineForm::DistributedEdges:
      return "edges";
  }
  return "matrix";
}

// ---------------------------------------------------------------------------

namespace {

/// Appends the error of x and reports whether the stopping rule fired.
bool record(Trajectory& t, const Vector& x, const Vector& target, const RunOptions& options) {
  const double err = (x - target).norm();
  if (!std::isfinite(err)) throw NoConvergence("ADMM iterates diverged (non-finite error)");
  t.errors.push_back(err);
  if (options.record_iterates) t.x.push_back(x);
  if (err <= options.stop_tol) {
    t.converged = true;
    return true;
  }
  return false;
}

void check_options(const RunOptions& options) {
  if (options.max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (!(options.stop_tol >= 0.0)) throw ConfigError("stop_tol must be nonnegative");
}

Trajectory run_matrix(const MatrixFormAdmm& engine, AdmmState state, const Vector& target,
                      const RunOptions& options) {
  Trajectory t;
  t.first_k = state.k + 1;
  if (options.record_iterates) t.zeta.push_back(state.zeta);
  for (int i = 0; i < options.max_iters; ++i) {
    state = engine.step(state);
    if (options.record_iterates) t.zeta.push_back(state.zeta);
    if (record(t, state.x, target, options)) break;
  }
  t.final_state = std::move(state);
  return t;
}

}  // namespace

Trajectory run(const ComponentStructure& cs, const ProblemInstance& instance,
               const Vector& x_star, const RunOptions& options, const InitialCondition& init) {
  check_options(options);
  if (x_star.size() != cs.dim()) throw std::invalid_argument("x_star has wrong dimension");
  const Vector target = x_star.replicate(cs.n_agents(), 1);

  Trajectory t;
  switch (options.form) {
    case EngineForm::Matrix: {
      const MatrixFormAdmm engine(cs, instance, options.rho);
      t = run_matrix(engine, engine.initial_state(init), target, options);
      break;
    }
    case EngineForm::DistributedGeneral: {
      const DistributedAdmm engine(cs, instance, options.rho);
      AgentState agents = engine.initial_agents(init);
      ClusterHeads heads = engine.initial_heads(init);
      for (int i = 0; i < options.max_iters; ++i) {
        engine.step(agents, heads);
        if (record(t, stack(agents.x), target, options)) break;
      }
      break;
    }
    case EngineForm::DistributedEdges: {
      const EdgeAdmm engine(cs, instance, options.rho);
      EdgeAgentState agents = engine.initial_agents(init);
      for (int i = 0; i < options.max_iters; ++i) {
        engine.step(agents);
        if (record(t, stack(agents.x), target, options)) break;
      }
      break;
    }
  }
  t.x_star = x_star;
  return t;
}

Trajectory resume(const ComponentStructure& cs, const ProblemInstance& instance,
                  const Vector& x_star, const RunOptions& options, const AdmmState& state) {
  check_options(options);
  if (x_star.size() != cs.dim()) throw std::invalid_argument("x_star has wrong dimension");
  const int TK = cs.total_size() * cs.dim();
  if (state.zeta.size() != TK || state.z.size() != TK || state.lambda.size() != TK ||
      state.x.size() != cs.n_agents() * cs.dim()) {
    throw ConfigError("snapshot dimensions do not match the topology");
  }
  const MatrixFormAdmm engine(cs, instance, options.rho);
  Trajectory t = run_matrix(engine, state, x_star.replicate(cs.n_agents(), 1), options);
  t.x_star = x_star;
  return t;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "k,err,log_err,rate_est\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < trajectory.errors.size(); ++i) {
    const int k = trajectory.first_k + static_cast<int>(i);
    const double err = trajectory.errors[i];
    const double log_err = std::log(err);
    out << k << ',' << err << ',' << log_err << ',' << -log_err / k << '\n';
  }
}

nlohmann::json to_json(const AdmmState& state) {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"k", state.k},
          {"x", vec(state.x)},
          {"z", vec(state.z)},
          {"lambda", vec(state.lambda)},
          {"zeta", vec(state.zeta)}};
}

AdmmState admm_state_from_json(const nlohmann::json& j) {
  auto vec = [&](const char* key) {
    const auto v = j.at(key).get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  try {
    AdmmState s;
    s.k = j.value("k", 0);
    s.x = vec("x");
    s.z = vec("z");
    s.lambda = vec("lambda");
    s.zeta = vec("zeta");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed state snapshot: ") + e.what());
  }
}

}  // namespace admmrate
