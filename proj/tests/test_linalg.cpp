#include "admmrate/error.hpp"
#include "admmrate/linalg.hpp"
#include "admmrate/random.hpp"
#include "admmrate/topology.hpp"

#include <doctest.h>

#include <algorithm>

using namespace admmrate;

namespace {

DenseMatrix random_matrix(Rng& rng, int rows, int cols) {
  DenseMatrix a(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) a(i, j) = rng.gaussian(0.0, 1.0);
  }
  return a;
}

/// Symmetric matrix of the given rank.
DenseMatrix random_low_rank(Rng& rng, int n, int r) {
  const DenseMatrix b = random_matrix(rng, n, r);
  DenseMatrix d = DenseMatrix::Zero(r, r);
  for (int i = 0; i < r; ++i) d(i, i) = (i % 2 ? -1.0 : 1.0) * (1.0 + rng.uniform());
  return b * d * b.transpose();
}

std::vector<double> sorted_real(const Spectrum& s) {
  std::vector<double> v;
  for (const auto& z : s) v.push_back(z.real());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_SUITE("linalg") {
  TEST_CASE("kron of identities and of a column with an identity") {
    CHECK(linalg::kron(DenseMatrix::Identity(2, 2), DenseMatrix::Identity(3, 3))
              .isApprox(DenseMatrix::Identity(6, 6)));
    const DenseMatrix ones = DenseMatrix::Ones(2, 1);
    const DenseMatrix k = linalg::kron(ones, DenseMatrix::Identity(2, 2));
    REQUIRE(k.rows() == 4);
    REQUIRE(k.cols() == 2);
    CHECK(k.topRows(2).isApprox(DenseMatrix::Identity(2, 2)));
    CHECK(k.bottomRows(2).isApprox(DenseMatrix::Identity(2, 2)));
  }

  TEST_CASE("kron(S, I_2) for the three-ring matches the direct lifting") {
    const auto cs = ring(3, 2);
    const DenseMatrix M = linalg::kron(selection_matrix(cs), DenseMatrix::Identity(2, 2));
    // Direct construction: row block r copies agent row_agent[r].
    DenseMatrix direct = DenseMatrix::Zero(12, 6);
    for (int r = 0; r < 6; ++r) {
      for (int d = 0; d < 2; ++d) direct(2 * r + d, 2 * cs.row_agent()[r] + d) = 1.0;
    }
    CHECK(M == direct);
    for (int i = 0; i < M.rows(); ++i) CHECK(M.row(i).sum() == 1.0);
  }

  TEST_CASE("mixed-product property of kron") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
      const DenseMatrix A = random_matrix(rng, 3, 2), C = random_matrix(rng, 2, 4);
      const DenseMatrix B = random_matrix(rng, 2, 3), D = random_matrix(rng, 3, 2);
      const DenseMatrix lhs = linalg::kron(A, B) * linalg::kron(C, D);
      const DenseMatrix rhs = linalg::kron(A * C, B * D);
      CHECK((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }
  }

  TEST_CASE("sym_eig basics") {
    auto e = linalg::sym_eig(DenseMatrix::Identity(3, 3));
    CHECK(e.values.isApprox(Vector::Ones(3)));
    e = linalg::sym_eig(DenseMatrix::Constant(2, 2, 0.5));
    CHECK(e.values(0) == doctest::Approx(0.0));
    CHECK(e.values(1) == doctest::Approx(1.0));
  }

  TEST_CASE("sym_eig of P + Q for the centralized three-agent case") {
    // P + Q = (1/3) 1 1' + I / 2 when sigma2 = rho = 16.
    const DenseMatrix a =
        DenseMatrix::Constant(3, 3, 1.0 / 3.0) + 0.5 * DenseMatrix::Identity(3, 3);
    const auto e = linalg::sym_eig(a);
    CHECK(e.values(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(e.values(1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(e.values(2) == doctest::Approx(1.5).epsilon(1e-12));
  }

  TEST_CASE("sym_eig reconstructs random symmetric matrices") {
    Rng rng(3);
    for (int n : {1, 2, 5, 17}) {
      const DenseMatrix b = random_matrix(rng, n, n);
      const DenseMatrix a = b + b.transpose();
      const auto e = linalg::sym_eig(a);
      const DenseMatrix rec = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
      CHECK((a - rec).norm() <= 1e-9 * a.norm());
      CHECK((e.vectors.transpose() * e.vectors - DenseMatrix::Identity(n, n)).norm() <= 1e-10);
      for (int i = 1; i < n; ++i) CHECK(e.values(i - 1) <= e.values(i));
    }
  }

  TEST_CASE("sym_eig rejects asymmetric input") {
    DenseMatrix a = DenseMatrix::Identity(2, 2);
    a(0, 1) = 1e-3;
    CHECK_THROWS_AS(linalg::sym_eig(a), NotSymmetric);
    CHECK_THROWS_AS(linalg::pinv(a), NotSymmetric);
  }

  TEST_CASE("real_eig on diagonal, rotation and symmetric matrices") {
    DenseMatrix d = DenseMatrix::Zero(2, 2);
    d(0, 0) = 0.5;
    d(1, 1) = 0.75;
    auto s = sorted_real(linalg::real_eig(d));
    CHECK(s[0] == doctest::Approx(0.5));
    CHECK(s[1] == doctest::Approx(0.75));

    DenseMatrix rot(2, 2);
    rot << 0, -1, 1, 0;
    const Spectrum r = linalg::real_eig(rot);
    REQUIRE(r.size() == 2);
    for (const auto& z : r) {
      CHECK(std::abs(z.real()) < 1e-14);
      CHECK(std::abs(std::abs(z.imag()) - 1.0) < 1e-14);
    }
    CHECK(r[0].imag() * r[1].imag() < 0.0);

    Rng rng(5);
    for (int n : {3, 8, 20}) {
      const DenseMatrix b = random_matrix(rng, n, n);
      const DenseMatrix a = b + b.transpose();
      const auto general = sorted_real(linalg::real_eig(a));
      const auto sym = linalg::sym_eig(a).values;
      for (int i = 0; i < n; ++i) CHECK(std::abs(general[i] - sym(i)) <= 1e-8);
    }
  }

  TEST_CASE("real_eig rejects non-square and non-finite input") {
    CHECK_THROWS_AS(linalg::real_eig(DenseMatrix::Zero(2, 3)), std::invalid_argument);
    DenseMatrix a = DenseMatrix::Identity(2, 2);
    a(0, 0) = std::nan("");
    CHECK_THROWS_AS(linalg::real_eig(a), std::invalid_argument);
  }

  TEST_CASE("balancing preserves the spectrum of badly scaled matrices") {
    DenseMatrix a(3, 3);
    a << 1, 1e6, 0, 1e-6, 2, 1e4, 0, 1e-4, 3;
    const DenseMatrix b = linalg::balance(a);
    const auto sa = sorted_real(linalg::real_eig(a));
    Eigen::EigenSolver<DenseMatrix> plain(a, false);
    std::vector<double> ref;
    for (const auto& z : plain.eigenvalues()) ref.push_back(z.real());
    std::sort(ref.begin(), ref.end());
    for (int i = 0; i < 3; ++i) CHECK(sa[i] == doctest::Approx(ref[i]).epsilon(1e-10));
    CHECK(b.norm() < a.norm());
  }

  TEST_CASE("sprad") {
    CHECK(linalg::sprad(DenseMatrix::Identity(4, 4)) == doctest::Approx(1.0));
    CHECK(linalg::sprad(0.3 * DenseMatrix::Identity(3, 3)) == doctest::Approx(0.3));
    DenseMatrix j(2, 2);
    j << 0.5, 1.0, 0.0, -0.7;
    CHECK(linalg::sprad(j) == doctest::Approx(0.7));
  }

  TEST_CASE("clustered modulus recovers a split defective eigenvalue") {
    // Jordan block at 0.5 perturbed in the corner: eigenvalues 0.5 +- 1e-8.
    DenseMatrix j(2, 2);
    j << 0.5, 1.0, 1e-16, 0.5;
    const Spectrum s = linalg::real_eig(j);
    CHECK(linalg::max_modulus(s) > 0.5 + 5e-9);
    CHECK(linalg::clustered_max_modulus(s, 1e-7) == doctest::Approx(0.5).epsilon(1e-14));
    // Well-separated eigenvalues are left alone.
    const Spectrum far{{0.2, 0.0}, {0.9, 0.0}};
    CHECK(linalg::clustered_max_modulus(far, 1e-7) == 0.9);
  }

  TEST_CASE("pinv basics and Penrose identities") {
    CHECK(linalg::pinv(DenseMatrix::Identity(3, 3)).isApprox(DenseMatrix::Identity(3, 3)));
    DenseMatrix d = DenseMatrix::Zero(2, 2);
    d(0, 0) = 2.0;
    const DenseMatrix pd = linalg::pinv(d);
    CHECK(pd(0, 0) == doctest::Approx(0.5));
    CHECK(pd(1, 1) == 0.0);

    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 2 + trial % 9;
      const int r = 1 + trial % n;
      const DenseMatrix a = random_low_rank(rng, n, r);
      const DenseMatrix p = linalg::pinv(a);
      const double scale = 1.0 + a.norm() + p.norm();
      CHECK((a * p * a - a).norm() <= 1e-8 * scale);
      CHECK((p * a * p - p).norm() <= 1e-8 * scale);
      CHECK(((a * p).transpose() - a * p).norm() <= 1e-8 * scale);
      CHECK(((p * a).transpose() - p * a).norm() <= 1e-8 * scale);
      CHECK(linalg::rank(a) == r);
    }
  }

  TEST_CASE("colspace projector") {
    CHECK(linalg::colspace_projector(DenseMatrix::Identity(4, 4))
              .isApprox(DenseMatrix::Identity(4, 4)));
    CHECK(linalg::colspace_projector(DenseMatrix::Zero(3, 3)).isZero());
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 3 + trial % 6;
      const DenseMatrix b = random_matrix(rng, n, 1 + trial % n);
      const DenseMatrix a = b * b.transpose();
      const DenseMatrix x = linalg::colspace_projector(a);
      CHECK((x * x - x).norm() <= 1e-10 * n);
      CHECK((x - x.transpose()).norm() <= 1e-10);
      CHECK((x * a - a).norm() <= 1e-10 * (1.0 + a.norm()));
    }
  }
}
