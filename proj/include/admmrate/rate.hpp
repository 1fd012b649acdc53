#pragma once

#include "admmrate/linalg.hpp"
#include "admmrate/objectives.hpp"
#include "admmrate/topology.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace admmrate {

namespace rate {

/// Eigenvalues of R within this distance of 1 are counted as unit
/// eigenvalues.
inline constexpr double kUnitTol = 1e-7;

/// Eigenvalues closer than this are merged before taking moduli (see
/// linalg::clustered_max_modulus).
inline constexpr double kClusterTol = 1e-7;

/// The projector path and the filtered-spectrum path must agree this well.
inline constexpr double kPathTol = 1e-8;

}  // namespace rate

/// Q = rho M (H)^{-1} M' with H = blockdiag(hessians) + rho M'M.
/// Throws SingularH when H is not positive definite.
DenseMatrix build_Q(const ComponentStructure& cs, const std::vector<DenseMatrix>& hessians,
                    double rho);

/// R = (I - P - Q)(I - 2P).
DenseMatrix build_R(const ComponentStructure& cs, const DenseMatrix& Q);

struct KernelInfo {
  int dimension = 0;          ///< dim ker(Q + P)
  DenseMatrix basis;          ///< orthonormal columns spanning ker(Q + P)
  int intersection_dimension = 0;  ///< dim(ker Q intersected with ker P)
};

KernelInfo kernel_N(const ComponentStructure& cs, const DenseMatrix& Q);

struct RateReport {
  double rho = 0.0;
  DenseMatrix Q;
  DenseMatrix R;
  double alpha = 0.0;           ///< projector path
  double alpha_filtered = 0.0;  ///< R's spectrum without its unit eigenvalues
  Spectrum spectrum;            ///< eigenvalues of R
  int dim_kernel = 0;
  bool tight = false;
  double tightness_value = 0.0;
  std::string tightness_note;
  Vector zeta_star;  ///< empty unless a fixed point was computed
};

/// alpha = sprad((Pi_colsp(P+Q) - (P+Q))(I - 2P)), cross-checked against the
/// spectrum of R with dim ker(Q+P) unit eigenvalues removed.
/// Throws Inconsistent when the unit-eigenvalue count or the two values
/// disagree.
RateReport compute_alpha(const ComponentStructure& cs, const DenseMatrix& Q);

/// Projector path only; used inside optimization loops.
double alpha_projector(const ComponentStructure& cs, const DenseMatrix& Q);

struct FixedPoint {
  Vector zeta;              ///< rho (I - 2P)(P - Q)^# M H^{-1} c
  Vector d;                 ///< -rho M H^{-1} c
  Vector x;                 ///< -H^{-1} M'(I - 2P) zeta - H^{-1} c
  double residual = 0.0;    ///< |zeta - R zeta - d|
  double reconstruction_error = 0.0;  ///< |x - 1 kron x*|
};

/// Fixed point of the affine recursion zeta' = R zeta + d, with the linear
/// term c_n = grad f_n(x*) - hess f_n(x*) x* (the exact linear coefficient for
/// quadratics).
FixedPoint fixed_point(const ComponentStructure& cs, const DenseMatrix& Q,
                       const ProblemInstance& instance, double rho,
                       const ConsensusMinimizer& minimizer);
FixedPoint fixed_point(const ComponentStructure& cs, const DenseMatrix& Q,
                       const ProblemInstance& instance, double rho);

struct TightnessResult {
  bool tight = false;
  double value = 0.0;  ///< |U' (I - 2P) M| with U spanning the modulus-alpha subspace
  int subspace_dim = 0;
  std::string note;
};

/// Checks that colsp((I - 2P) M) is not orthogonal to the invariant subspace
/// of R for its eigenvalues of modulus alpha.
TightnessResult tightness_check(const ComponentStructure& cs, const DenseMatrix& Q, double alpha);

/// max(rho, sigma2) / (rho + sigma2).
double centralized_alpha(double rho, double sigma2);

struct RingRoot {
  int k = 0;
  double s = 0.0;  ///< trace
  double D = 0.0;  ///< determinant
  ComplexScalar lambda1;
  ComplexScalar lambda2;
};

struct RingRateBreakdown {
  std::string regime;  ///< low, mid, high or fallback
  double alpha = 0.0;  ///< from the roots
  double alpha_closed_form = 0.0;
  std::vector<RingRoot> roots;  ///< k = 0..N-1
};

/// Ring with equal curvature sigma2: roots of lambda^2 - s_k lambda + D_k for
/// theta_k = 2 pi k / N, alpha = largest modulus after removing the unit
/// root at k = 0. The piecewise closed form is evaluated alongside.
RingRateBreakdown ring_alpha(double rho, double sigma2, int n_agents);

/// Piecewise closed form for the ring. Thresholds sigma2 / (2 sin(2 pi / N))
/// and sigma2 / (2 tan^2(pi / N)); for N = 3 the intervals are ill-ordered
/// and the larger of the k = 0 and k = 1 root moduli is used.
double ring_closed_form(double rho, double sigma2, int n_agents, std::string* regime = nullptr);

/// Minimizing step size sigma2 / (2 sin(2 pi / N)) and the rate there.
double ring_optimal_rho(double sigma2, int n_agents);
double ring_optimal_alpha(int n_agents);

struct RhoOptimum {
  double rho = 0.0;
  double alpha = 0.0;
  int evaluations = 0;
};

/// 64-point log grid over [rho_min, rho_max], then golden-section search in
/// log rho around the best grid point down to relative width 1e-6.
RhoOptimum optimize_rho(const ComponentStructure& cs, const std::vector<DenseMatrix>& hessians,
                        double rho_min, double rho_max);

/// Everything at once: minimizer, Q, alpha, tightness and fixed point.
RateReport analyze(const ComponentStructure& cs, const ProblemInstance& instance, double rho,
                   const std::optional<ConsensusMinimizer>& minimizer = std::nullopt);

/// {"alpha", "rho", "dim_kernel", "tight", "spectrum": [[re, im], ...]} plus
/// diagnostics.
nlohmann::json to_json(const RateReport& report);

}  // namespace admmrate
