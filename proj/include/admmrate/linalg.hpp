#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace admmrate {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexScalar = std::complex<double>;

/// Eigenvalues of a square matrix, unordered, repeated according to
/// algebraic multiplicity.
using Spectrum = std::vector<ComplexScalar>;

namespace linalg {

/// Relative threshold separating "zero" from "nonzero" eigenvalues in rank,
/// kernel and column-space decisions.
inline constexpr double kRankTol = 1e-10;

/// Relative asymmetry accepted by the symmetric routines.
inline constexpr double kSymmetryTol = 1e-12;

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b);

bool is_symmetric(const DenseMatrix& a, double rel_tol = kSymmetryTol);

struct SymmetricEigen {
  Vector values;        ///< ascending
  DenseMatrix vectors;  ///< orthonormal columns, same order as values
};

/// Eigendecomposition of a symmetric matrix. Throws NotSymmetric when the
/// asymmetry exceeds kSymmetryTol relative to the Frobenius norm.
SymmetricEigen sym_eig(const DenseMatrix& a);

/// Diagonal similarity D^{-1} A D with power-of-two scalings that equalizes
/// row and column norms. Eigenvalues are unchanged.
DenseMatrix balance(const DenseMatrix& a);

/// Full complex spectrum of a general real square matrix: balancing,
/// Hessenberg reduction, then Francis double-shift QR with 2x2 deflation.
/// Throws NoConvergence when more than 100 sweeps per eigenvalue are needed.
Spectrum real_eig(const DenseMatrix& a);

double max_modulus(const Spectrum& spectrum);

/// Largest modulus after replacing every cluster of eigenvalues lying within
/// `cluster_tol` of each other (single-linkage) by the cluster mean.
///
/// Defective eigenvalues split by O(sqrt(eps)) under rounding while the mean
/// of the split group stays accurate to O(eps); this recovers the modulus of
/// such groups to full precision.
double clustered_max_modulus(const Spectrum& spectrum, double cluster_tol);

double sprad(const DenseMatrix& a);

/// Moore-Penrose pseudo-inverse of a symmetric matrix.
DenseMatrix pinv(const DenseMatrix& a);

/// Orthogonal projector onto the column space of a symmetric PSD matrix.
DenseMatrix colspace_projector(const DenseMatrix& a);

/// Numerical rank from singular values above kRankTol * largest.
int rank(const DenseMatrix& a);

}  // namespace linalg
}  // namespace admmrate
