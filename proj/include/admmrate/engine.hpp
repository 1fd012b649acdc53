#pragma once

#include "admmrate/linalg.hpp"
#include "admmrate/objectives.hpp"
#include "admmrate/topology.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace admmrate {

/// Iterate of the matrix-form ADMM. zeta = lambda + rho z is the driver
/// sequence; from the first iteration on, rho z = P zeta and
/// lambda = (I - P) zeta.
struct AdmmState {
  Vector x;       ///< NK, stacked agent estimates
  Vector z;       ///< TK
  Vector lambda;  ///< TK
  Vector zeta;    ///< TK
  int k = 0;
};

/// Memory of the agents in the cluster-head algorithm.
struct AgentState {
  std::vector<Vector> x;
  std::vector<Vector> chi;    ///< average of the cluster means over sigma(n)
  std::vector<Vector> delta;  ///< scaled average of the agent's multipliers
  int k = 0;
};

/// Cluster means computed by the cluster heads, one per component.
struct ClusterHeads {
  std::vector<Vector> zbar;
};

/// Memory of the agents when every component is an edge.
struct EdgeAgentState {
  std::vector<Vector> x;
  std::vector<Vector> xbar;  ///< neighbour average
  std::vector<Vector> delta;
  int k = 0;
};

/// Starting point shared by all three engine forms. z0 and lambda0 live in
/// the stacked component space; x0 is only used by the edge form (and must
/// satisfy z0 = P M x0 there).
struct InitialCondition {
  Vector x0;
  Vector z0;
  Vector lambda0;
};

/// z0 = lambda0 = 0.
InitialCondition zero_init(const ComponentStructure& cs);

/// x0 ~ N(0, scale^2) per coordinate, z0 = P M x0 and lambda0 = (I - P) g
/// with g ~ N(0, scale^2). Consistent with every engine form.
InitialCondition random_init(const ComponentStructure& cs, std::uint64_t seed,
                             double scale = 1.0);

/// Every copy set to x: x0 = 1 kron x, z0 = M x0, lambda0 = 0.
InitialCondition consensus_init(const ComponentStructure& cs, const Vector& x);

/// Reference implementation on the stacked vectors.
///
/// The x-update minimizes f(x) + rho/2 |Mx - (z - lambda/rho)|^2: a single
/// linear solve with H = Phi + rho M'M when every objective is quadratic,
/// otherwise one prox per agent (the problem is block separable).
class MatrixFormAdmm {
 public:
  MatrixFormAdmm(ComponentStructure cs, ProblemInstance instance, double rho);

  AdmmState initial_state(const InitialCondition& init) const;
  AdmmState step(const AdmmState& state) const;

  const MixingMatrices& matrices() const { return mm_; }
  double rho() const { return rho_; }

 private:
  ComponentStructure cs_;
  ProblemInstance instance_;
  double rho_;
  MixingMatrices mm_;
  std::vector<double> sigma_size_;
  std::optional<Eigen::LLT<DenseMatrix>> h_factor_;
  Vector c_;
};

/// Cluster-head form: agents run a prox step, cluster heads average their
/// members, agents refresh chi and delta. One call is one synchronous round.
class DistributedAdmm {
 public:
  DistributedAdmm(ComponentStructure cs, ProblemInstance instance, double rho);

  /// Requires z0 to be constant on every component and lambda0 to sum to
  /// zero on every component (both to 1e-10); throws std::invalid_argument
  /// otherwise.
  AgentState initial_agents(const InitialCondition& init) const;
  ClusterHeads initial_heads(const InitialCondition& init) const;

  void step(AgentState& agents, ClusterHeads& heads) const;

 private:
  ComponentStructure cs_;
  ProblemInstance instance_;
  double rho_;
};

/// Edge form: only neighbour exchanges, no cluster heads.
class EdgeAdmm {
 public:
  /// Throws InvalidTopology unless cs is an edge clustering.
  EdgeAdmm(ComponentStructure cs, ProblemInstance instance, double rho);

  /// Requires z0 = P M x0 and lambda0 summing to zero on every edge.
  EdgeAgentState initial_agents(const InitialCondition& init) const;

  void step(EdgeAgentState& agents) const;

  const std::vector<std::vector<int>>& neighbours() const { return neighbours_; }

 private:
  ComponentStructure cs_;
  ProblemInstance instance_;
  double rho_;
  std::vector<std::vector<int>> neighbours_;
};

AdmmState step_matrix_form(const AdmmState& state, double rho, const ProblemInstance& instance,
                           const ComponentStructure& cs);
AgentState step_distributed_general(const AgentState& agents, ClusterHeads& heads, double rho,
                                    const ProblemInstance& instance,
                                    const ComponentStructure& cs);
EdgeAgentState step_distributed_edges(const EdgeAgentState& agents, double rho,
                                      const ProblemInstance& instance,
                                      const ComponentStructure& cs);

/// Stacks per-agent vectors into one NK vector.
Vector stack(const std::vector<Vector>& parts);

enum class EngineForm { Matrix, DistributedGeneral, DistributedEdges };

EngineForm engine_form_from_string(const std::string& name);
std::string to_string(EngineForm form);

struct RunOptions {
  double rho = 1.0;
  int max_iters = 2000;
  double stop_tol = 1e-12;  ///< absolute, on |x_k - 1 kron x*|
  EngineForm form = EngineForm::Matrix;
  bool record_iterates = false;
};

struct Trajectory {
  /// errors[i] = |x_k - 1 kron x*| at iteration k = i + 1.
  std::vector<double> errors;
  /// x_k for k = 1.. when iterates are recorded.
  std::vector<Vector> x;
  /// zeta_k for k = 0.. when iterates are recorded (matrix form only).
  std::vector<Vector> zeta;
  Vector x_star;
  /// Iteration index of errors[0]; 1 unless the run was resumed.
  int first_k = 1;
  bool converged = false;
  /// Last matrix-form state, for snapshots.
  std::optional<AdmmState> final_state;

  int iterations() const { return static_cast<int>(errors.size()); }
};

/// Iterates until max_iters or until the error drops to stop_tol.
Trajectory run(const ComponentStructure& cs, const ProblemInstance& instance,
               const Vector& x_star, const RunOptions& options, const InitialCondition& init);

/// Matrix-form run resumed from a snapshot state.
Trajectory resume(const ComponentStructure& cs, const ProblemInstance& instance,
                  const Vector& x_star, const RunOptions& options, const AdmmState& state);

/// CSV with header `k,err,log_err,rate_est` where rate_est = -log_err / k.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

nlohmann::json to_json(const AdmmState& state);
AdmmState admm_state_from_json(const nlohmann::json& j);

}  // namespace admmrate
