#include "admmrate/rate.hpp"

#include "admmrate/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace admmrate {

namespace {

constexpr double kTightTol = 1e-8;
constexpr double kModulusMatchTol = 1e-6;

void require_valid(const ComponentStructure& cs) {
  const ValidationReport report = validate(cs);
  if (!report.covered) throw InvalidTopology(report.summary());
  if (!report.connected) throw NotConnected(report.summary());
}

/// blockdiag(hessians) + rho M'M. M'M is diagonal with entries |sigma(n)|.
DenseMatrix build_H(const ComponentStructure& cs, const std::vector<DenseMatrix>& hessians,
                    double rho) {
  const int N = cs.n_agents();
  const int K = cs.dim();
  if (static_cast<int>(hessians.size()) != N) {
    throw std::invalid_argument("build_H: expected one Hessian per agent");
  }
  DenseMatrix H = DenseMatrix::Zero(N * K, N * K);
  for (int n = 0; n < N; ++n) {
    if (hessians[n].rows() != K || hessians[n].cols() != K) {
      throw std::invalid_argument("build_H: Hessian of agent " + std::to_string(n + 1) +
                                  " is not K x K");
    }
    H.block(n * K, n * K, K, K) = hessians[n];
    H.block(n * K, n * K, K, K).diagonal().array() +=
        rho * static_cast<double>(cs.memberships(n).size());
  }
  return H;
}

Eigen::LLT<DenseMatrix> factor_H(const DenseMatrix& H) {
  Eigen::LLT<DenseMatrix> llt(0.5 * (H + H.transpose()));
  if (llt.info() != Eigen::Success) {
    throw SingularH("H = hess f + rho M'M is not positive definite");
  }
  return llt;
}

DenseMatrix reflection(const MixingMatrices& mm) {
  return DenseMatrix::Identity(mm.P.rows(), mm.P.cols()) - 2.0 * mm.P;
}

/// Exchanges the adjacent diagonal entries k and k+1 of the upper
/// triangular T, updating the Schur vectors U.
void swap_schur(Eigen::MatrixXcd& T, Eigen::MatrixXcd& U, Eigen::Index k) {
  const ComplexScalar a = T(k, k);
  const ComplexScalar b = T(k, k + 1);
  const ComplexScalar c = T(k + 1, k + 1);
  const double norm = std::hypot(std::abs(b), std::abs(c - a));
  if (norm == 0.0) return;
  // First column: eigenvector of the 2x2 block for the eigenvalue c.
  const ComplexScalar v1 = b / norm;
  const ComplexScalar v2 = (c - a) / norm;
  Eigen::Matrix2cd Z;
  Z << v1, -std::conj(v2), v2, std::conj(v1);
  T.middleRows(k, 2) = (Z.adjoint() * T.middleRows(k, 2)).eval();
  T.middleCols(k, 2) = (T.middleCols(k, 2) * Z).eval();
  U.middleCols(k, 2) = (U.middleCols(k, 2) * Z).eval();
  T(k + 1, k) = 0.0;
}

}  // namespace

DenseMatrix build_Q(const ComponentStructure& cs, const std::vector<DenseMatrix>& hessians,
                    double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("rho must be positive and finite");
  require_valid(cs);
  const MixingMatrices mm = mixing_matrices(cs);
  const auto llt = factor_H(build_H(cs, hessians, rho));
  const DenseMatrix Q = rho * mm.M * llt.solve(mm.M.transpose());
  return 0.5 * (Q + Q.transpose());
}

DenseMatrix build_R(const ComponentStructure& cs, const DenseMatrix& Q) {
  const MixingMatrices mm = mixing_matrices(cs);
  const auto TK = mm.P.rows();
  if (Q.rows() != TK || Q.cols() != TK) throw std::invalid_argument("build_R: Q has wrong size");
  return (DenseMatrix::Identity(TK, TK) - mm.P - Q) * reflection(mm);
}

KernelInfo kernel_N(const ComponentStructure& cs, const DenseMatrix& Q) {
  const MixingMatrices mm = mixing_matrices(cs);
  const DenseMatrix sum = mm.P + Q;
  const auto eig = linalg::sym_eig(sum);
  const double scale = eig.values.size() ? eig.values.cwiseAbs().maxCoeff() : 0.0;
  std::vector<Eigen::Index> null_cols;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values(i) <= linalg::kRankTol * scale) null_cols.push_back(i);
  }
  KernelInfo info;
  info.dimension = static_cast<int>(null_cols.size());
  info.basis.resize(sum.rows(), info.dimension);
  for (int j = 0; j < info.dimension; ++j) info.basis.col(j) = eig.vectors.col(null_cols[j]);

  DenseMatrix stacked(2 * Q.rows(), Q.cols());
  stacked << Q, mm.P;
  info.intersection_dimension = static_cast<int>(Q.cols()) - linalg::rank(stacked);
  return info;
}

double alpha_projector(const ComponentStructure& cs, const DenseMatrix& Q) {
  const MixingMatrices mm = mixing_matrices(cs);
  const DenseMatrix sum = mm.P + Q;
  const DenseMatrix X = (linalg::colspace_projector(sum) - sum) * reflection(mm);
  return linalg::clustered_max_modulus(linalg::real_eig(X), rate::kClusterTol);
}

RateReport compute_alpha(const ComponentStructure& cs, const DenseMatrix& Q) {
  RateReport report;
  report.Q = Q;
  report.R = build_R(cs, Q);
  report.alpha = alpha_projector(cs, Q);
  report.dim_kernel = kernel_N(cs, Q).dimension;
  report.spectrum = linalg::real_eig(report.R);

  Spectrum rest;
  int unit = 0;
  for (const auto& v : report.spectrum) {
    if (std::abs(v - 1.0) < rate::kUnitTol) {
      ++unit;
    } else {
      rest.push_back(v);
    }
  }
  if (unit != report.dim_kernel) {
    throw Inconsistent("R has " + std::to_string(unit) + " unit eigenvalues but dim ker(Q+P) = " +
                       std::to_string(report.dim_kernel));
  }
  report.alpha_filtered = linalg::clustered_max_modulus(rest, rate::kClusterTol);
  if (std::abs(report.alpha - report.alpha_filtered) > rate::kPathTol) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "projector path gives alpha = " << report.alpha << ", filtered spectrum gives "
        << report.alpha_filtered;
    throw Inconsistent(msg.str());
  }
  return report;
}

FixedPoint fixed_point(const ComponentStructure& cs, const DenseMatrix& Q,
                       const ProblemInstance& instance, double rho,
                       const ConsensusMinimizer& minimizer) {
  const int N = cs.n_agents();
  const int K = cs.dim();
  if (instance.n_agents() != N || instance.dim != K) {
    throw InvalidObjective("instance does not match the topology");
  }
  const MixingMatrices mm = mixing_matrices(cs);
  const auto llt = factor_H(build_H(cs, minimizer.hessians, rho));

  Vector c(N * K);
  for (int n = 0; n < N; ++n) {
    c.segment(n * K, K) = instance.oracles[n].gradient(minimizer.x_star) -
                          minimizer.hessians[n] * minimizer.x_star;
  }
  const Vector h_inv_c = llt.solve(c);
  const DenseMatrix refl = reflection(mm);

  FixedPoint fp;
  fp.d = -rho * mm.M * h_inv_c;
  fp.zeta = rho * refl * (linalg::pinv(mm.P - Q) * (mm.M * h_inv_c));
  fp.x = -llt.solve(mm.M.transpose() * (refl * fp.zeta)) - h_inv_c;
  const DenseMatrix R = build_R(cs, Q);
  fp.residual = (fp.zeta - R * fp.zeta - fp.d).norm();
  fp.reconstruction_error = (fp.x - minimizer.x_star.replicate(N, 1)).norm();
  return fp;
}

FixedPoint fixed_point(const ComponentStructure& cs, const DenseMatrix& Q,
                       const ProblemInstance& instance, double rho) {
  return fixed_point(cs, Q, instance, rho, solve_consensus_minimizer(instance));
}

TightnessResult tightness_check(const ComponentStructure& cs, const DenseMatrix& Q,
                                double alpha) {
  TightnessResult result;
  if (!(alpha > 1e-14)) {
    result.note = "alpha is zero; there is no modulus-alpha subspace";
    return result;
  }
  const MixingMatrices mm = mixing_matrices(cs);
  const DenseMatrix R = build_R(cs, Q);
  Eigen::ComplexSchur<DenseMatrix> schur(R);
  if (schur.info() != Eigen::Success) throw NoConvergence("Schur decomposition of R failed");
  Eigen::MatrixXcd T = schur.matrixT();
  Eigen::MatrixXcd U = schur.matrixU();

  const Eigen::Index n = T.rows();
  std::vector<bool> selected(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const ComplexScalar v = T(i, i);
    selected[i] = std::abs(std::abs(v) - alpha) <= kModulusMatchTol * alpha &&
                  std::abs(v - 1.0) >= rate::kUnitTol;
  }
  Eigen::Index front = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!selected[j]) continue;
    for (Eigen::Index i = j - 1; i >= front; --i) swap_schur(T, U, i);
    ++front;
  }
  result.subspace_dim = static_cast<int>(front);
  if (front == 0) {
    result.note = "no eigenvalue of R has modulus alpha";
    return result;
  }
  const Eigen::MatrixXcd B = (reflection(mm) * mm.M).cast<ComplexScalar>();
  const Eigen::MatrixXcd proj = U.leftCols(front).adjoint() * B;
  result.value = Eigen::JacobiSVD<Eigen::MatrixXcd>(proj).singularValues()(0);
  result.tight = result.value > kTightTol;
  if (!result.tight) result.note = "colsp((I-2P)M) is orthogonal to the modulus-alpha subspace";
  return result;
}

double centralized_alpha(double rho, double sigma2) {
  if (!(rho > 0.0) || !(sigma2 > 0.0)) throw ConfigError("rho and sigma2 must be positive");
  return std::max(rho, sigma2) / (rho + sigma2);
}

RingRateBreakdown ring_alpha(double rho, double sigma2, int n_agents) {
  if (n_agents < 3) throw InvalidTopology("ring needs at least three agents");
  if (!(rho > 0.0) || !(sigma2 > 0.0)) throw ConfigError("rho and sigma2 must be positive");
  RingRateBreakdown out;
  const double denom = sigma2 + 2.0 * rho;
  double alpha = 0.0;
  for (int k = 0; k < n_agents; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / n_agents;
    RingRoot r;
    r.k = k;
    r.s = (sigma2 + 2.0 * rho * (1.0 + std::cos(theta))) / denom;
    r.D = rho * (1.0 + std::cos(theta)) / denom;
    const double disc = r.s * r.s - 4.0 * r.D;
    if (disc >= 0.0) {
      const double big = 0.5 * (r.s + std::sqrt(disc));
      r.lambda1 = big;
      r.lambda2 = big != 0.0 ? r.D / big : 0.0;
    } else {
      const double im = 0.5 * std::sqrt(-disc);
      r.lambda1 = ComplexScalar(0.5 * r.s, im);
      r.lambda2 = ComplexScalar(0.5 * r.s, -im);
    }
    // At k = 0 the larger root is the unit eigenvalue carried by ker(Q+P).
    if (k != 0) alpha = std::max(alpha, std::abs(r.lambda1));
    alpha = std::max(alpha, std::abs(r.lambda2));
    out.roots.push_back(r);
  }
  out.alpha = alpha;
  out.alpha_closed_form = ring_closed_form(rho, sigma2, n_agents, &out.regime);
  return out;
}

double ring_closed_form(double rho, double sigma2, int n_agents, std::string* regime) {
  if (n_agents < 3) throw InvalidTopology("ring needs at least three agents");
  const double theta = 2.0 * std::numbers::pi / n_agents;
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  const double t = std::tan(0.5 * theta);
  const double denom = sigma2 + 2.0 * rho;
  const double low_edge = sigma2 / (2.0 * s);
  const double high_edge = sigma2 / (2.0 * t * t);

  auto low = [&] {
    const double disc = std::max(0.0, sigma2 * sigma2 - 4.0 * rho * rho * s * s);
    return (sigma2 + 2.0 * rho * (1.0 + c) + std::sqrt(disc)) / (2.0 * denom);
  };
  auto mid = [&] { return std::sqrt(rho * (1.0 + c) / denom); };
  auto high = [&] { return 2.0 * rho / denom; };

  std::string name;
  double value;
  if (low_edge > high_edge) {
    name = "fallback";
    value = std::max(rho <= low_edge ? low() : mid(), high());
  } else if (rho <= low_edge) {
    name = "low";
    value = low();
  } else if (rho <= high_edge) {
    name = "mid";
    value = mid();
  } else {
    name = "high";
    value = high();
  }
  if (regime) *regime = name;
  return value;
}

double ring_optimal_rho(double sigma2, int n_agents) {
  return sigma2 / (2.0 * std::sin(2.0 * std::numbers::pi / n_agents));
}

double ring_optimal_alpha(int n_agents) {
  const double theta = 2.0 * std::numbers::pi / n_agents;
  return std::sqrt((1.0 + std::cos(theta)) / (1.0 + std::sin(theta))) / std::numbers::sqrt2;
}

RhoOptimum optimize_rho(const ComponentStructure& cs, const std::vector<DenseMatrix>& hessians,
                        double rho_min, double rho_max) {
  if (!(rho_min > 0.0) || !(rho_max > rho_min) || !std::isfinite(rho_max)) {
    throw ConfigError("rho range must satisfy 0 < rho_min < rho_max");
  }
  RhoOptimum best{0.0, std::numeric_limits<double>::infinity(), 0};
  auto evaluate = [&](double u) {
    const double rho = std::exp(u);
    const double a = alpha_projector(cs, build_Q(cs, hessians, rho));
    ++best.evaluations;
    if (a < best.alpha) {
      best.alpha = a;
      best.rho = rho;
    }
    return a;
  };

  constexpr int kGrid = 64;
  const double u_min = std::log(rho_min);
  const double u_max = std::log(rho_max);
  const double step = (u_max - u_min) / (kGrid - 1);
  int best_index = 0;
  double best_grid = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double a = evaluate(u_min + i * step);
    if (a < best_grid) {
      best_grid = a;
      best_index = i;
    }
  }

  double a = u_min + std::max(0, best_index - 1) * step;
  double b = u_min + std::min(kGrid - 1, best_index + 1) * step;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = evaluate(x1);
  double f2 = evaluate(x2);
  while (b - a > 1e-6) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = evaluate(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = evaluate(x2);
    }
  }
  return best;
}

RateReport analyze(const ComponentStructure& cs, const ProblemInstance& instance, double rho,
                   const std::optional<ConsensusMinimizer>& minimizer) {
  if (instance.n_agents() != cs.n_agents() || instance.dim != cs.dim()) {
    throw InvalidObjective("instance does not match the topology");
  }
  const ConsensusMinimizer mini = minimizer ? *minimizer : solve_consensus_minimizer(instance);
  const DenseMatrix Q = build_Q(cs, mini.hessians, rho);
  RateReport report = compute_alpha(cs, Q);
  report.rho = rho;
  const TightnessResult tight = tightness_check(cs, Q, report.alpha);
  report.tight = tight.tight;
  report.tightness_value = tight.value;
  report.tightness_note = tight.note;
  report.zeta_star = fixed_point(cs, Q, instance, rho, mini).zeta;
  return report;
}

nlohmann::json to_json(const RateReport& report) {
  nlohmann::json spectrum = nlohmann::json::array();
  for (const auto& v : report.spectrum) spectrum.push_back({v.real(), v.imag()});
  nlohmann::json j = {{"alpha", report.alpha},
                      {"alpha_filtered", report.alpha_filtered},
                      {"rho", report.rho},
                      {"dim_kernel", report.dim_kernel},
                      {"tight", report.tight},
                      {"tightness_value", report.tightness_value},
                      {"spectrum", spectrum}};
  if (!report.tightness_note.empty()) j["tightness_note"] = report.tightness_note;
  if (report.zeta_star.size() > 0) {
    j["zeta_star"] = std::vector<double>(report.zeta_star.data(),
                                         report.zeta_star.data() + report.zeta_star.size());
  }
  return j;
}

}  // namespace admmrate
