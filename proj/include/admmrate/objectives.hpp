#pragma once

#include "admmrate/linalg.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace admmrate {

/// f(x) = 0.5 x' phi x + c' x + d with phi symmetric PSD.
struct QuadraticObjective {
  DenseMatrix phi;
  Vector c;
  double d = 0.0;
};

/// f(x) = exp(beta x), scalar.
struct ExponentialObjective {
  double beta = 0.0;
};

/// f(x) = a (x - b)^2, scalar.
struct ScaledSquareObjective {
  double a = 0.0;
  double b = 0.0;
};

/// User-supplied smooth convex scalar function given by its value and first
/// two derivatives.
struct ScalarSmoothObjective {
  std::function<double(double)> value;
  std::function<double(double)> first;
  std::function<double(double)> second;
};

/// Private cost of one agent.
class Objective {
 public:
  using Kind = std::variant<QuadraticObjective, ExponentialObjective, ScaledSquareObjective,
                            ScalarSmoothObjective>;

  /// Throws InvalidObjective unless phi is square, symmetric and PSD and c
  /// has matching size.
  static Objective quadratic(DenseMatrix phi, Vector c, double d = 0.0);
  static Objective exponential(double beta);
  /// Throws InvalidObjective when a < 0.
  static Objective scaled_square(double a, double b);
  static Objective scalar(std::function<double(double)> value,
                          std::function<double(double)> first,
                          std::function<double(double)> second);
  /// The zero function on R^dim.
  static Objective zero(int dim);

  int dim() const;
  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  DenseMatrix hessian(const Vector& x) const;

  /// Exact quadratic representation when the objective is quadratic
  /// (Quadratic and ScaledSquare kinds).
  std::optional<QuadraticObjective> quadratic_form() const;

  const Kind& kind() const { return kind_; }
  std::string kind_name() const;

 private:
  explicit Objective(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

/// Minimizer of t f(w) + 0.5 |w - v|^2.
///
/// Quadratic objectives use the closed form (t phi + I)^{-1} (v - t c).
/// Scalar objectives solve t f'(w) + w - v = 0 with Newton steps kept inside
/// a sign-change bracket, falling back to bisection.
/// Throws NoConvergence or NonConvexDetected.
Vector prox(const Objective& f, double t, const Vector& v);

/// The N private costs of a consensus problem over R^K.
struct ProblemInstance {
  std::vector<Objective> oracles;
  int dim = 1;

  ProblemInstance() = default;
  /// Throws InvalidObjective when an oracle's dimension differs from dim.
  ProblemInstance(std::vector<Objective> oracles, int dim);

  int n_agents() const { return static_cast<int>(oracles.size()); }
  bool is_quadratic() const;
};

struct ConsensusMinimizer {
  Vector x_star;
  std::vector<DenseMatrix> hessians;  ///< per-agent Hessian at x_star
  int iterations = 0;
};

/// Newton iteration on sum_n grad f_n(x) = 0, with step halving whenever
/// the full step increases the gradient norm. Verifies that the summed
/// Hessian at the solution is positive definite.
/// Throws NoConvergence or AssumptionViolated.
ConsensusMinimizer solve_consensus_minimizer(const ProblemInstance& p,
                                             const std::optional<Vector>& x0 = std::nullopt);

enum class ExperimentObjectiveKind { Exponential, Quadratic };

/// Reproducible random instances used in the convergence experiments:
///  - Exponential: f_n(x) = exp(beta_n x), beta_n ~ U[-10, 10] then centred
///    so that sum beta_n == 0 holds exactly in left-to-right summation.
///  - Quadratic: f_n(x) = a_n (x - b_n)^2, a_n ~ U[1, 100], b_n ~ N(5, 100).
ProblemInstance sample_experiment_objectives(ExperimentObjectiveKind kind, int n_agents,
                                             std::uint64_t seed);

/// {"kind": "quadratic", "phi": [...], "c": [...], "d": 0} |
/// {"kind": "exponential", "beta": b} | {"kind": "scaled_square", "a": a, "b": b}.
/// `phi` is row-major, either flat (K*K numbers) or nested rows.
nlohmann::json to_json(const Objective& f);
Objective objective_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ProblemInstance& p);
ProblemInstance problem_instance_from_json(const nlohmann::json& j);

}  // namespace admmrate
