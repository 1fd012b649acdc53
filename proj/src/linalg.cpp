#include "admmrate/linalg.hpp"

#include "admmrate/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace admmrate::linalg {

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

bool is_symmetric(const DenseMatrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  return (a - a.transpose()).norm() <= rel_tol * a.norm();
}

namespace {

void require_symmetric(const DenseMatrix& a, const char* who) {
  if (a.rows() != a.cols()) {
    throw NotSymmetric(std::string(who) + ": matrix is not square");
  }
  if (!is_symmetric(a)) {
    throw NotSymmetric(std::string(who) + ": asymmetry " +
                       std::to_string((a - a.transpose()).norm()) +
                       " exceeds tolerance");
  }
}

}  // namespace

SymmetricEigen sym_eig(const DenseMatrix& a) {
  require_symmetric(a, "sym_eig");
  if (a.size() == 0) return {Vector(0), DenseMatrix(0, 0)};
  const DenseMatrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NoConvergence("sym_eig: tridiagonal QR did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

DenseMatrix balance(const DenseMatrix& a) {
  // Parlett-Reinsch scaling in radix 2, so no rounding is introduced.
  constexpr double radix = 2.0;
  constexpr double sqrdx = radix * radix;
  DenseMatrix b = a;
  const Eigen::Index n = b.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double r = 0.0;
      double c = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(b(j, i));
        r += std::abs(b(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        b.row(i) /= f;
        b.col(i) *= f;
      }
    }
  }
  return b;
}

Spectrum real_eig(const DenseMatrix& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("real_eig: matrix is not square");
  }
  if (!a.allFinite()) {
    throw std::invalid_argument("real_eig: matrix has non-finite entries");
  }
  const Eigen::Index n = a.rows();
  if (n == 0) return {};
  Eigen::EigenSolver<DenseMatrix> solver;
  solver.setMaxIterations(static_cast<Eigen::Index>(100) * n);
  solver.compute(balance(a), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NoConvergence("real_eig: QR iteration exceeded its sweep budget");
  }
  const auto& values = solver.eigenvalues();
  return Spectrum(values.begin(), values.end());
}

double max_modulus(const Spectrum& spectrum) {
  double m = 0.0;
  for (const auto& v : spectrum) m = std::max(m, std::abs(v));
  return m;
}

double clustered_max_modulus(const Spectrum& spectrum, double cluster_tol) {
  const std::size_t n = spectrum.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(spectrum[i] - spectrum[j]) < cluster_tol) {
        parent[find(i)] = find(j);
      }
    }
  }
  std::vector<ComplexScalar> sum(n, ComplexScalar{0.0, 0.0});
  std::vector<int> count(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    sum[r] += spectrum[i];
    ++count[r];
  }
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (count[i] > 0) m = std::max(m, std::abs(sum[i] / double(count[i])));
  }
  return m;
}

double sprad(const DenseMatrix& a) { return max_modulus(real_eig(a)); }

DenseMatrix pinv(const DenseMatrix& a) {
  const auto eig = sym_eig(a);
  const double scale = eig.values.size() ? eig.values.cwiseAbs().maxCoeff() : 0.0;
  Vector inv = Vector::Zero(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (std::abs(eig.values(i)) > kRankTol * scale) inv(i) = 1.0 / eig.values(i);
  }
  return eig.vectors * inv.asDiagonal() * eig.vectors.transpose();
}

DenseMatrix colspace_projector(const DenseMatrix& a) {
  const auto eig = sym_eig(a);
  const Eigen::Index n = a.rows();
  const double scale = n ? eig.values.cwiseAbs().maxCoeff() : 0.0;
  DenseMatrix proj = DenseMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (eig.values(i) > kRankTol * scale) {
      proj.noalias() += eig.vectors.col(i) * eig.vectors.col(i).transpose();
    }
  }
  return proj;
}

int rank(const DenseMatrix& a) {
  if (a.size() == 0) return 0;
  Eigen::BDCSVD<DenseMatrix> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > kRankTol * s(0)) ++r;
  }
  return r;
}

}  // namespace admmrate::linalg
