#include "admmrate/objectives.hpp"

#include "admmrate/error.hpp"
#include "admmrate/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace admmrate {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

struct ScalarDerivatives {
  std::function<double(double)> first;
  std::function<double(double)> second;
};

ScalarDerivatives scalar_derivatives(const Objective::Kind& kind) {
  return std::visit(
      Overloaded{
          [](const QuadraticObjective&) -> ScalarDerivatives { return {}; },
          [](const ExponentialObjective& e) -> ScalarDerivatives {
            const double b = e.beta;
            return {[b](double x) { return b * std::exp(b * x); },
                    [b](double x) { return b * b * std::exp(b * x); }};
          },
          [](const ScaledSquareObjective& s) -> ScalarDerivatives {
            const double a = s.a;
            const double b = s.b;
            return {[a, b](double x) { return 2.0 * a * (x - b); },
                    [a](double) { return 2.0 * a; }};
          },
          [](const ScalarSmoothObjective& s) -> ScalarDerivatives {
            return {s.first, s.second};
          }},
      kind);
}

double checked_second(const ScalarDerivatives& d, double w) {
  const double h = d.second(w);
  if (h < -1e-12 * (1.0 + std::abs(w))) {
    throw NonConvexDetected("negative second derivative " + std::to_string(h) + " at " +
                            std::to_string(w));
  }
  return h;
}

// Root of r(w) = t f'(w) + w - v; r is increasing for convex f.
double scalar_prox(const ScalarDerivatives& d, double t, double v) {
  constexpr int kMaxIter = 200;
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  const double tol = 1e-12 * (1.0 + std::abs(v));
  auto residual = [&](double w) { return t * d.first(w) + w - v; };

  const double r_v = residual(v);
  if (r_v == 0.0) return v;

  double lo;
  double hi;
  if (std::isfinite(r_v)) {
    // f' monotone: r(v - t f'(v)) = t (f'(v - t f'(v)) - f'(v)) has the
    // opposite sign of r(v).
    const double other = v - r_v;
    lo = std::min(v, other);
    hi = std::max(v, other);
  } else {
    // f'(v) overflowed; walk downwards until the residual is finite and
    // nonpositive.
    hi = v;
    double step = 1.0;
    lo = v - step;
    for (int i = 0; !(residual(lo) <= 0.0); ++i) {
      if (i > 1100) throw NoConvergence("prox: could not bracket the root");
      hi = lo;
      step *= 2.0;
      lo = v - step;
    }
  }

  double w = std::isfinite(r_v) ? v : 0.5 * (lo + hi);
  double r = residual(w);
  for (int it = 0; it < kMaxIter; ++it) {
    if (std::abs(r) <= tol) return w;
    if (r > 0.0) {
      hi = std::min(hi, w);
    } else {
      lo = std::max(lo, w);
    }
    if (hi - lo <= 4.0 * kEps * std::max(1.0, std::abs(w))) return w;

    const double slope = t * checked_second(d, w) + 1.0;
    double next = w - r / slope;
    if (!std::isfinite(next) || next < lo || next > hi) next = 0.5 * (lo + hi);

    // Far from the root of a steep exponential, Newton crawls by about
    // 1/beta per step. Gallop along the Newton direction while the residual
    // keeps its sign.
    const double step = next - w;
    if (step != 0.0 && std::abs(step) < 0.25 * (hi - lo)) {
      for (double grow = 2.0 * step;; grow *= 2.0) {
        const double probe = w + grow;
        if (!(probe > lo && probe < hi)) break;
        const double rp = residual(probe);
        if (!std::isfinite(rp)) break;
        if ((rp > 0.0) != (r > 0.0)) {
          (rp > 0.0 ? hi : lo) = probe;
          break;
        }
        (r > 0.0 ? hi : lo) = probe;
        next = probe;
      }
    }
    w = next;
    r = residual(w);
    if (!std::isfinite(r)) {
      throw NoConvergence("prox: non-finite residual at w=" + std::to_string(w));
    }
  }
  throw NoConvergence("prox: Newton/bisection budget exhausted");
}

}  // namespace

Objective Objective::quadratic(DenseMatrix phi, Vector c, double d) {
  if (phi.rows() != phi.cols() || phi.rows() == 0) {
    throw InvalidObjective("quadratic: phi must be a nonempty square matrix");
  }
  if (c.size() != phi.rows()) throw InvalidObjective("quadratic: c has the wrong size");
  if (!phi.allFinite() || !c.allFinite() || !std::isfinite(d)) {
    throw InvalidObjective("quadratic: non-finite coefficients");
  }
  if (!linalg::is_symmetric(phi)) throw InvalidObjective("quadratic: phi is not symmetric");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(0.5 * (phi + phi.transpose()),
                                                 Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, phi.norm())) {
    throw InvalidObjective("quadratic: phi is not positive semidefinite");
  }
  return Objective(QuadraticObjective{std::move(phi), std::move(c), d});
}

Objective Objective::exponential(double beta) {
  if (!std::isfinite(beta)) throw InvalidObjective("exponential: beta must be finite");
  return Objective(ExponentialObjective{beta});
}

Objective Objective::scaled_square(double a, double b) {
  if (!(a >= 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw InvalidObjective("scaled_square: need finite a >= 0 and finite b");
  }
  return Objective(ScaledSquareObjective{a, b});
}

Objective Objective::scalar(std::function<double(double)> value,
                            std::function<double(double)> first,
                            std::function<double(double)> second) {
  if (!value || !first || !second) {
    throw InvalidObjective("scalar: value and both derivatives are required");
  }
  return Objective(ScalarSmoothObjective{std::move(value), std::move(first), std::move(second)});
}

Objective Objective::zero(int dim) {
  return quadratic(DenseMatrix::Zero(dim, dim), Vector::Zero(dim), 0.0);
}

int Objective::dim() const {
  if (const auto* q = std::get_if<QuadraticObjective>(&kind_)) return static_cast<int>(q->c.size());
  return 1;
}

std::string Objective::kind_name() const {
  return std::visit(Overloaded{[](const QuadraticObjective&) { return "quadratic"; },
                               [](const ExponentialObjective&) { return "exponential"; },
                               [](const ScaledSquareObjective&) { return "scaled_square"; },
                               [](const ScalarSmoothObjective&) { return "scalar"; }},
                    kind_);
}

double Objective::value(const Vector& x) const {
  return std::visit(
      Overloaded{[&](const QuadraticObjective& q) {
                   return 0.5 * x.dot(q.phi * x) + q.c.dot(x) + q.d;
                 },
                 [&](const ExponentialObjective& e) { return std::exp(e.beta * x(0)); },
                 [&](const ScaledSquareObjective& s) {
                   return s.a * (x(0) - s.b) * (x(0) - s.b);
                 },
                 [&](const ScalarSmoothObjective& s) { return s.value(x(0)); }},
      kind_);
}

Vector Objective::gradient(const Vector& x) const {
  if (const auto* q = std::get_if<QuadraticObjective>(&kind_)) return q->phi * x + q->c;
  return Vector::Constant(1, scalar_derivatives(kind_).first(x(0)));
}

DenseMatrix Objective::hessian(const Vector& x) const {
  if (const auto* q = std::get_if<QuadraticObjective>(&kind_)) return q->phi;
  return DenseMatrix::Constant(1, 1, scalar_derivatives(kind_).second(x(0)));
}

std::optional<QuadraticObjective> Objective::quadratic_form() const {
  if (const auto* q = std::get_if<QuadraticObjective>(&kind_)) return *q;
  if (const auto* s = std::get_if<ScaledSquareObjective>(&kind_)) {
    return QuadraticObjective{DenseMatrix::Constant(1, 1, 2.0 * s->a),
                              Vector::Constant(1, -2.0 * s->a * s->b), s->a * s->b * s->b};
  }
  return std::nullopt;
}

Vector prox(const Objective& f, double t, const Vector& v) {
  if (!(t > 0.0)) throw std::invalid_argument("prox: weight must be positive");
  if (v.size() != f.dim()) throw std::invalid_argument("prox: dimension mismatch");
  if (const auto* q = std::get_if<QuadraticObjective>(&f.kind())) {
    const DenseMatrix a = t * q->phi + DenseMatrix::Identity(v.size(), v.size());
    return a.llt().solve(v - t * q->c);
  }
  return Vector::Constant(1, scalar_prox(scalar_derivatives(f.kind()), t, v(0)));
}

ProblemInstance::ProblemInstance(std::vector<Objective> oracles_in, int dim_in)
    : oracles(std::move(oracles_in)), dim(dim_in) {
  for (std::size_t n = 0; n < oracles.size(); ++n) {
    if (oracles[n].dim() != dim) {
      throw InvalidObjective("agent " + std::to_string(n + 1) + " has dimension " +
                             std::to_string(oracles[n].dim()) + ", expected " +
                             std::to_string(dim));
    }
  }
}

bool ProblemInstance::is_quadratic() const {
  return std::all_of(oracles.begin(), oracles.end(),
                     [](const Objective& f) { return f.quadratic_form().has_value(); });
}

ConsensusMinimizer solve_consensus_minimizer(const ProblemInstance& p,
                                             const std::optional<Vector>& x0) {
  constexpr int kMaxIter = 200;
  constexpr double kTol = 1e-12;
  const int K = p.dim;
  if (p.oracles.empty()) throw InvalidObjective("empty problem instance");

  auto total_gradient = [&](const Vector& x, double* scale) {
    Vector g = Vector::Zero(K);
    double s = 0.0;
    for (const auto& f : p.oracles) {
      const Vector gi = f.gradient(x);
      g += gi;
      s += gi.norm();
    }
    if (scale) *scale = s;
    return g;
  };
  auto total_hessian = [&](const Vector& x) {
    DenseMatrix h = DenseMatrix::Zero(K, K);
    for (const auto& f : p.oracles) h += f.hessian(x);
    return h;
  };

  ConsensusMinimizer out;
  Vector x = x0.value_or(Vector::Zero(K));
  if (x.size() != K) throw std::invalid_argument("initial point has the wrong dimension");

  int it = 0;
  for (;; ++it) {
    double scale = 0.0;
    const Vector g = total_gradient(x, &scale);
    const double gnorm = g.norm();
    if (!std::isfinite(gnorm)) throw NoConvergence("aggregate minimizer: gradient diverged");
    if (gnorm <= kTol) break;
    if (it == kMaxIter) throw NoConvergence("aggregate minimizer: Newton budget exhausted");

    const DenseMatrix h = total_hessian(x);
    Vector step = h.ldlt().solve(-g);
    if (!step.allFinite()) step = -g;

    double t = 1.0;
    bool decreased = false;
    for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
      const Vector trial = x + t * step;
      const double tn = total_gradient(trial, nullptr).norm();
      if (std::isfinite(tn) && tn < gnorm) {
        decreased = true;
        break;
      }
    }
    if (!decreased) {
      // Already at the rounding floor of the gradient sum.
      if (gnorm <= 1e-13 * std::max(1.0, scale)) break;
      throw NoConvergence("aggregate minimizer: line search failed");
    }
    x += t * step;
    if (!x.allFinite() || x.norm() > 1e12) {
      throw NoConvergence("aggregate minimizer: iterates diverged");
    }
  }

  out.x_star = x;
  out.iterations = it;
  DenseMatrix sum = DenseMatrix::Zero(K, K);
  for (const auto& f : p.oracles) {
    out.hessians.push_back(f.hessian(x));
    sum += out.hessians.back();
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(0.5 * (sum + sum.transpose()),
                                                 Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 1e-10)) {
    throw AssumptionViolated("sum of Hessians at the minimizer is not positive definite");
  }
  return out;
}

ProblemInstance sample_experiment_objectives(ExperimentObjectiveKind kind, int n_agents,
                                             std::uint64_t seed) {
  if (n_agents < 1) throw InvalidObjective("need at least one agent");
  Rng rng(seed);
  std::vector<Objective> oracles;
  if (kind == ExperimentObjectiveKind::Exponential) {
    std::vector<double> beta(n_agents);
    for (auto& b : beta) b = rng.uniform(-10.0, 10.0);
    double mean = 0.0;
    for (double b : beta) mean += b;
    mean /= n_agents;
    for (auto& b : beta) b -= mean;
    // Absorb the centring round-off into the last coefficient.
    double partial = 0.0;
    for (int n = 0; n + 1 < n_agents; ++n) partial += beta[n];
    beta.back() = -partial;
    for (double b : beta) oracles.push_back(Objective::exponential(b));
  } else {
    std::vector<double> a(n_agents);
    std::vector<double> b(n_agents);
    for (auto& v : a) v = rng.uniform(1.0, 100.0);
    for (auto& v : b) v = rng.gaussian(5.0, 10.0);
    for (int n = 0; n < n_agents; ++n) oracles.push_back(Objective::scaled_square(a[n], b[n]));
  }
  return ProblemInstance(std::move(oracles), 1);
}

nlohmann::json to_json(const Objective& f) {
  return std::visit(
      Overloaded{
          [](const QuadraticObjective& q) -> nlohmann::json {
            std::vector<double> phi;
            for (Eigen::Index i = 0; i < q.phi.rows(); ++i) {
              for (Eigen::Index j = 0; j < q.phi.cols(); ++j) phi.push_back(q.phi(i, j));
            }
            return {{"kind", "quadratic"},
                    {"phi", phi},
                    {"c", std::vector<double>(q.c.data(), q.c.data() + q.c.size())},
                    {"d", q.d}};
          },
          [](const ExponentialObjective& e) -> nlohmann::json {
            return {{"kind", "exponential"}, {"beta", e.beta}};
          },
          [](const ScaledSquareObjective& s) -> nlohmann::json {
            return {{"kind", "scaled_square"}, {"a", s.a}, {"b", s.b}};
          },
          [](const ScalarSmoothObjective&) -> nlohmann::json {
            throw InvalidObjective("user-supplied scalar objectives cannot be serialized");
          }},
      f.kind());
}

Objective objective_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "quadratic") {
      const auto& jphi = j.at("phi");
      std::vector<double> flat;
      if (jphi.is_number()) {
        flat.push_back(jphi.get<double>());
      } else {
        for (const auto& e : jphi) {
          if (e.is_array()) {
            for (const auto& x : e) flat.push_back(x.get<double>());
          } else {
            flat.push_back(e.get<double>());
          }
        }
      }
      const auto k = static_cast<Eigen::Index>(std::llround(std::sqrt(double(flat.size()))));
      if (k * k != static_cast<Eigen::Index>(flat.size())) {
        throw InvalidObjective("quadratic: phi must hold K*K entries");
      }
      DenseMatrix phi(k, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index c = 0; c < k; ++c) phi(i, c) = flat[i * k + c];
      }
      Vector c = Vector::Zero(k);
      if (j.contains("c")) {
        const auto& jc = j.at("c");
        const auto cv = jc.is_number() ? std::vector<double>{jc.get<double>()}
                                       : jc.get<std::vector<double>>();
        if (static_cast<Eigen::Index>(cv.size()) != k) {
          throw InvalidObjective("quadratic: c must hold K entries");
        }
        for (Eigen::Index i = 0; i < k; ++i) c(i) = cv[i];
      }
      return Objective::quadratic(std::move(phi), std::move(c), j.value("d", 0.0));
    }
    if (kind == "exponential") return Objective::exponential(j.at("beta").get<double>());
    if (kind == "scaled_square") {
      return Objective::scaled_square(j.at("a").get<double>(), j.at("b").get<double>());
    }
    throw InvalidObjective("unknown objective kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidObjective(std::string("malformed objective JSON: ") + e.what());
  }
}

nlohmann::json to_json(const ProblemInstance& p) {
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& f : p.oracles) agents.push_back(to_json(f));
  return {{"dim", p.dim}, {"agents", agents}};
}

ProblemInstance problem_instance_from_json(const nlohmann::json& j) {
  try {
    const auto& agents = j.is_array() ? j : j.at("agents");
    std::vector<Objective> oracles;
    for (const auto& a : agents) oracles.push_back(objective_from_json(a));
    if (oracles.empty()) throw InvalidObjective("no agents in objective list");
    const int dim = j.is_object() ? j.value("dim", oracles.front().dim()) : oracles.front().dim();
    return ProblemInstance(std::move(oracles), dim);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidObjective(std::string("malformed problem JSON: ") + e.what());
  }
}

}  // namespace admmrate
