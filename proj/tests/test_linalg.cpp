#include <doctest.h>

#include <bit>
#include <numeric>

#include "cfa/errors.hpp"
#include "cfa/linalg.hpp"
#include "support.hpp"

using namespace cfa;

namespace {

SymMatrix mat2(double a, double b, double c) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, b, c;
  return SymMatrix(m);
}

double fro(const Eigen::MatrixXd& a) { return a.norm(); }

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("sym_eigen examples") {
  const EigenPairs id = sym_eigen(SymMatrix::identity(3));
  CHECK(id.values.isApprox(Eigen::Vector3d::Ones()));
  CHECK(fro(id.vectors.transpose() * id.vectors - Eigen::Matrix3d::Identity()) < 1e-12);

  const Eigen::VectorXd d = sym_eigenvalues(SymMatrix::diagonal(Eigen::Vector3d(3, 1, 2)));
  CHECK(d(0) == doctest::Approx(3.0));
  CHECK(d(1) == doctest::Approx(2.0));
  CHECK(d(2) == doctest::Approx(1.0));

  const Eigen::VectorXd v = sym_eigenvalues(mat2(1, 0.5, 1));
  CHECK(v(0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(v(1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("sym_eigen rejects non-finite input") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  m(0, 1) = m(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sym_eigen(m), InputError);
}

TEST_CASE("symmetric storage") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 4, 1;
  const SymMatrix s(m);
  CHECK(s(0, 1) == s(1, 0));
  CHECK(s(0, 1) == 3.0);
  CHECK_THROWS_AS(SymMatrix(Eigen::MatrixXd::Zero(2, 3)), InputError);
}

TEST_CASE("eigendecomposition invariants on random matrices") {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const int p = 1 + trial % 20;
    const Eigen::MatrixXd a = oracle::random_sym(rng, p);
    const EigenPairs e = sym_eigen(a);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(p, p);
    CHECK(fro(e.vectors.transpose() * e.vectors - id) <= 1e-10);
    CHECK(fro(e.vectors * e.values.asDiagonal() * e.vectors.transpose() - a) <= 1e-8 * fro(a));
    for (int i = 1; i < p; ++i) CHECK(e.values(i - 1) >= e.values(i));
  }
}

TEST_CASE("large decompositions take the LAPACK path and stay accurate") {
  Rng rng(12);
  for (int p : {30, 120, 250}) {
    const Eigen::MatrixXd a = oracle::random_sym(rng, p);
    const EigenPairs e = sym_eigen(a);
    CHECK(fro(e.vectors * e.values.asDiagonal() * e.vectors.transpose() - a) <= 1e-8 * fro(a));
    CHECK((e.values - oracle::eigvals_desc(a)).cwiseAbs().maxCoeff() <= 1e-9 * fro(a));
  }
}

TEST_CASE("schatten_q examples") {
  CHECK(schatten_q(SymMatrix::identity(3), 1) == doctest::Approx(3.0));
  CHECK(schatten_q(SymMatrix::diagonal(Eigen::Vector2d(3, -4)), 2) == doctest::Approx(5.0));
  CHECK(schatten_q(mat2(1, 0.5, 1), 1) == doctest::Approx(2.0));
  CHECK_THROWS_AS(schatten_q(SymMatrix::identity(2), 0.5), InputError);
}

TEST_CASE("schatten_q matches eigenvalue sums and Frobenius norm") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 2 + trial % 9;
    const SymMatrix a(oracle::random_sym(rng, p));
    const Eigen::VectorXd lam = oracle::eigvals_desc(a.mat());
    CHECK(schatten_q(a, 1) == doctest::Approx(lam.cwiseAbs().sum()).epsilon(1e-10));
    const double s2 = schatten_q(a, 2);
    CHECK(s2 * s2 == doctest::Approx(a.mat().squaredNorm()).epsilon(1e-10));
  }
}

TEST_CASE("psd_project examples") {
  const SymMatrix a = psd_project(SymMatrix::diagonal(Eigen::Vector2d(2, -1)));
  CHECK(fro(a.mat() - Eigen::Vector2d(2, 0).asDiagonal().toDenseMatrix()) < 1e-12);
  const SymMatrix b = psd_project(mat2(0, 1, 0));
  CHECK(fro(b.mat() - mat2(0.5, 0.5, 0.5).mat()) < 1e-12);
  Rng rng(14);
  const SymMatrix c(oracle::random_psd(rng, 5, 5));
  CHECK(fro(psd_project(c).mat() - c.mat()) < 1e-10);
}

TEST_CASE("psd_project is idempotent and 1-Lipschitz") {
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const int p = 2 + trial % 7;
    const SymMatrix a(oracle::random_sym(rng, p));
    const SymMatrix b(oracle::random_sym(rng, p));
    const SymMatrix pa = psd_project(a);
    CHECK(fro(psd_project(pa).mat() - pa.mat()) <= 1e-10);
    CHECK(oracle::lambda_min(pa.mat()) >= -1e-10);
    CHECK(fro(pa.mat() - psd_project(b).mat()) <= fro(a.mat() - b.mat()) + 1e-10);
  }
}

TEST_CASE("psd_power examples") {
  CHECK(fro(psd_power(SymMatrix::identity(3), 2.5).mat() - Eigen::MatrixXd::Identity(3, 3)) <
        1e-12);
  CHECK(fro(psd_power(SymMatrix::diagonal(Eigen::Vector2d(4, 1)), 2).mat() -
            Eigen::Vector2d(16, 1).asDiagonal().toDenseMatrix()) < 1e-12);
  const SymMatrix proj = mat2(0.5, 0.5, 0.5);
  CHECK(fro(psd_power(proj, 2).mat() - proj.mat()) < 1e-12);
  CHECK_THROWS_AS(psd_power(SymMatrix::diagonal(Eigen::Vector2d(1, -0.5)), 2), NotPSDError);
  // Round-off sized negatives are clamped rather than rejected.
  CHECK_NOTHROW(psd_power(SymMatrix::diagonal(Eigen::Vector2d(1, -1e-9)), 2));
}

TEST_CASE("best_rank_r examples") {
  const SymMatrix d = SymMatrix::diagonal(Eigen::Vector3d(3, 2, 1));
  CHECK(fro(best_rank_r(d, 0).mat()) == 0.0);
  CHECK(fro(best_rank_r(d, 2).mat() - Eigen::Vector3d(3, 2, 0).asDiagonal().toDenseMatrix()) <
        1e-12);
  CHECK(fro(best_rank_r(d, 3).mat() - d.mat()) < 1e-12);
  CHECK_THROWS_AS(best_rank_r(d, 4), InputError);
}

TEST_CASE("best_rank_r beats every other eigen-subset (Eckart-Young)") {
  Rng rng(16);
  for (int trial = 0; trial < 40; ++trial) {
    const int p = 2 + trial % 5;
    const Eigen::MatrixXd a = oracle::random_psd(rng, p, p);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    for (int r = 0; r <= p; ++r) {
      const double ours = fro(a - best_rank_r(SymMatrix(a), r).mat());
      double best = std::numeric_limits<double>::infinity();
      for (unsigned mask = 0; mask < (1u << p); ++mask) {
        if (std::popcount(mask) != r) continue;
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
        for (int i = 0; i < p; ++i)
          if (mask & (1u << i))
            b += es.eigenvalues()(i) * es.eigenvectors().col(i) *
                 es.eigenvectors().col(i).transpose();
        best = std::min(best, fro(a - b));
      }
      CHECK(ours <= best + 1e-10);
      // Random rank-r competitors never win either.
      const Eigen::MatrixXd other = oracle::random_psd(rng, p, std::max(r, 1));
      if (r > 0) CHECK(ours <= fro(a - other) + 1e-10);
    }
  }
}

TEST_CASE("to_correlation examples") {
  CHECK(fro(to_correlation(SymMatrix::diagonal(Eigen::Vector2d(4, 9))).mat() -
            Eigen::MatrixXd::Identity(2, 2)) < 1e-15);
  const SymMatrix c = mat2(1, 0.3, 1);
  CHECK(fro(to_correlation(c).mat() - c.mat()) < 1e-15);
  CHECK(fro(to_correlation(mat2(4, 2, 4)).mat() - mat2(1, 0.5, 1).mat()) < 1e-15);
  CHECK_THROWS_AS(to_correlation(SymMatrix::diagonal(Eigen::Vector2d(1, 0))), InputError);
}

TEST_CASE("capped simplex projection satisfies its optimality conditions") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 8;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = 2.0 * rng.normal();
    const double k = rng.uniform() * n;
    const Eigen::VectorXd x = project_capped_simplex(v, k);
    CHECK(x.sum() == doctest::Approx(k).epsilon(1e-9));
    CHECK(x.minCoeff() >= 0.0);
    CHECK(x.maxCoeff() <= 1.0);
    // Free coordinates share one shift; clamped ones lie on the correct side of it.
    double tau = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < n; ++i)
      if (x(i) > 1e-12 && x(i) < 1 - 1e-12) tau = v(i) - x(i);
    if (!std::isnan(tau)) {
      for (int i = 0; i < n; ++i) {
        if (x(i) <= 1e-12) CHECK(v(i) - tau <= 1e-9);
        else if (x(i) >= 1 - 1e-12) CHECK(v(i) - tau >= 1 - 1e-9);
        else CHECK(v(i) - x(i) == doctest::Approx(tau).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("spectrahedron projection lands in the set") {
  Rng rng(18);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = 3 + trial % 5;
    const int k = 1 + trial % (p - 1);
    const SymMatrix w = project_spectrahedron(SymMatrix(oracle::random_sym(rng, p)), k);
    const Eigen::VectorXd lam = oracle::eigvals_desc(w.mat());
    CHECK(lam.minCoeff() >= -1e-10);
    CHECK(lam.maxCoeff() <= 1 + 1e-10);
    CHECK(w.mat().trace() == doctest::Approx(k).epsilon(1e-9));
  }
}

}  // TEST_SUITE
