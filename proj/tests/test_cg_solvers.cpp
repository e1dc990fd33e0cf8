#include <doctest.h>

#include "cfa/cg_solvers.hpp"
#include "cfa/errors.hpp"
#include "cfa/weyl_bounds.hpp"
#include "support.hpp"

using namespace cfa;

namespace {

SymMatrix running_example() {
  Eigen::MatrixXd m(2, 2);
  m << 1, 0.5, 0.5, 1;
  return SymMatrix(m);
}

CgConfig with(CgAlgorithm a) {
  CgConfig c;
  c.algorithm = a;
  return c;
}

void check_solution(const ProblemSpec& spec, const Solution& s) {
  CHECK(check_feasible(spec.sigma, s.phi, 1e-6).feasible);
  CHECK(numerical_rank(s.theta) <= spec.rank);
  if (spec.q == 1.0) {
    Eigen::MatrixXd m = spec.sigma.mat();
    m.diagonal() -= s.phi;
    CHECK(s.objective == doctest::Approx(oracle::trailing(m, spec.rank)).epsilon(1e-9).scale(1));
  }
}

}  // namespace

TEST_SUITE("cg_solvers") {

TEST_CASE("update_w examples") {
  const SymMatrix m = SymMatrix::diagonal(Eigen::Vector3d(3, 2, 1));
  const SymMatrix w = update_w(m, 1);
  CHECK((w.mat() - Eigen::Vector3d(0, 1, 1).asDiagonal().toDenseMatrix()).norm() < 1e-12);
  CHECK((w.mat() * m.mat()).trace() == doctest::Approx(3.0));
  CHECK((update_w(m, 0).mat() - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
  const SymMatrix w2 = update_w(running_example(), 1);
  Eigen::MatrixXd expect(2, 2);
  expect << 0.5, -0.5, -0.5, 0.5;
  CHECK((w2.mat() - expect).norm() < 1e-12);
  CHECK((w2.mat() * running_example().mat()).trace() == doctest::Approx(0.5));
}

TEST_CASE("update_w lands in the spectrahedron as a projector") {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const int p = 2 + trial % 10;
    const int r = trial % p;
    const SymMatrix w = update_w(SymMatrix(oracle::random_sym(rng, p)), r);
    const Eigen::VectorXd lam = oracle::eigvals_desc(w.mat());
    for (int i = 0; i < p; ++i)
      CHECK(std::min(std::abs(lam(i)), std::abs(lam(i) - 1.0)) < 1e-8);
    CHECK(w.mat().trace() == doctest::Approx(p - r).epsilon(1e-10));
  }
}

TEST_CASE("stationarity_gap examples") {
  const SymMatrix m = SymMatrix::diagonal(Eigen::Vector3d(3, 2, 1));
  const auto spec = ProblemSpec::make(m, 1);
  const PhiVec zero = PhiVec::Zero(3);
  CHECK(stationarity_gap(spec, update_w(m, 1), zero) == doctest::Approx(0.0).scale(1));
  const SymMatrix flat((2.0 / 3.0) * Eigen::MatrixXd::Identity(3, 3));
  CHECK(stationarity_gap(spec, flat, zero) == doctest::Approx(-1.0));
  const auto spec0 = ProblemSpec::make(m, 0);
  CHECK(stationarity_gap(spec0, SymMatrix::identity(3), zero) == doctest::Approx(0.0).scale(1));
}

TEST_CASE("concave algorithm examples") {
  const SymMatrix d = SymMatrix::diagonal(Eigen::Vector3d(2, 1, 0.5));
  for (int r = 0; r < 3; ++r) {
    const auto spec = ProblemSpec::make(d, r);
    const CgResult res = solve_cg(spec, with(CgAlgorithm::Concave));
    CHECK(res.solution.objective == doctest::Approx(0.0).scale(1).epsilon(1e-7));
    // Only r = 0 has a unique minimizer.
    if (r == 0) CHECK((res.solution.phi - Eigen::Vector3d(2, 1, 0.5)).cwiseAbs().maxCoeff() < 1e-6);
  }
  const auto spec = ProblemSpec::make(running_example(), 1);
  const CgResult res = solve_cg(spec, with(CgAlgorithm::Concave));
  CHECK(res.solution.objective == doctest::Approx(0.0).scale(1).epsilon(1e-7));
  CHECK((res.solution.phi - Eigen::Vector2d(0.5, 0.5)).cwiseAbs().maxCoeff() < 1e-5);
  CHECK(res.algorithm == CgAlgorithm::Concave);
}

TEST_CASE("smooth algorithm examples") {
  const SymMatrix d = SymMatrix::diagonal(Eigen::Vector3d(2, 1, 0.5));
  const CgResult a = solve_cg(ProblemSpec::make(d, 1), with(CgAlgorithm::Smooth));
  CHECK(a.solution.objective == doctest::Approx(0.0).scale(1).epsilon(1e-7));
  CHECK(a.iterations <= 2);
  const CgResult b = solve_cg(ProblemSpec::make(running_example(), 1), with(CgAlgorithm::Smooth));
  CHECK(b.solution.objective == doctest::Approx(0.0).scale(1).epsilon(1e-6));
}

TEST_CASE("default algorithm follows q") {
  Rng rng(42);
  const SymMatrix s = oracle::random_factor_cov(rng, 5, 2);
  CHECK(solve_cg(ProblemSpec::make(s, 2, 1.0)).algorithm == CgAlgorithm::Concave);
  CHECK(solve_cg(ProblemSpec::make(s, 2, 2.0)).algorithm == CgAlgorithm::Concave);
  CHECK(solve_cg(ProblemSpec::make(s, 2, 1.5)).algorithm == CgAlgorithm::Smooth);
  CHECK_THROWS_AS(solve_cg(ProblemSpec::make(s, 2, 1.5), with(CgAlgorithm::Concave)), InputError);
}

TEST_CASE("traces are monotone and final points are feasible") {
  Rng rng(43);
  for (int trial = 0; trial < 24; ++trial) {
    const int p = 4 + trial % 9;
    const int r = 1 + trial % 3;
    const double q = trial % 4 == 3 ? 1.5 : (trial % 2 ? 2.0 : 1.0);
    const auto spec = ProblemSpec::make(oracle::random_factor_cov(rng, p, r + 1), r, q);
    for (CgAlgorithm a : {CgAlgorithm::Concave, CgAlgorithm::Smooth}) {
      if (a == CgAlgorithm::Concave && q == 1.5) continue;
      const CgResult res = solve_cg(spec, with(a));
      check_solution(spec, res.solution);
      for (size_t k = 1; k < res.trace.size(); ++k)
        CHECK(res.trace[k].value <= res.trace[k - 1].value + 1e-12);
      if (a == CgAlgorithm::Concave) {
        // Every W iterate is an extreme point of the spectrahedron.
        const Eigen::VectorXd lam = oracle::eigvals_desc(res.solution.w->mat());
        for (int i = 0; i < p; ++i)
          CHECK(std::min(std::abs(lam(i)), std::abs(lam(i) - 1.0)) < 1e-6);
      }
    }
  }
}

TEST_CASE("the sublinear rate holds at every prefix") {
  Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = 5 + trial % 10;
    const auto spec = ProblemSpec::make(oracle::random_factor_cov(rng, p, 3), 2);
    const CgResult res = solve_cg(spec, with(CgAlgorithm::Concave));
    const auto& t = res.trace;
    double best = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k + 1 < t.size(); ++k) {
      best = std::min(best, -t[k].delta);
      const double bound = (t[0].value - t[k + 1].value) / static_cast<double>(k + 1);
      CHECK(best <= bound + 1e-10);
    }
  }
}

TEST_CASE("upper-bound sanity against a grid oracle") {
  Rng rng(45);
  for (int trial = 0; trial < 12; ++trial) {
    const int p = 3 + trial % 3;
    const int r = 1 + trial % (p - 1);
    const SymMatrix sigma = oracle::random_factor_cov(rng, p, r);
    const auto spec = ProblemSpec::make(sigma, r);
    const CgResult res = solve_cg(spec);
    const auto grid = oracle::grid_minimum(sigma.mat(), r, compute_u(sigma), 51);
    CHECK(res.solution.objective <= grid.value + 1e-3);
  }
}

TEST_CASE("restarts never do worse than a single start") {
  Rng rng(46);
  for (int trial = 0; trial < 6; ++trial) {
    const auto spec = ProblemSpec::make(oracle::random_factor_cov(rng, 8, 3), 2);
    CgConfig one;
    CgConfig many;
    many.restarts = 4;
    many.seed = 7;
    CHECK(solve_cg(spec, many).solution.objective <=
          solve_cg(spec, one).solution.objective + 1e-12);
  }
}

TEST_CASE("scale_to_feasible and joint objective") {
  const PhiVec phi = scale_to_feasible(running_example(), Eigen::Vector2d(1.0, 1.0));
  CHECK(oracle::lambda_min(running_example().minus_diag(phi).mat()) >= 0.0);
  CHECK(phi(0) == doctest::Approx(0.5).epsilon(1e-9));
  const auto spec = ProblemSpec::make(running_example(), 1);
  const SymMatrix w = update_w(running_example(), 1);
  CHECK(joint_objective(spec, w, PhiVec::Zero(2)) == doctest::Approx(0.5));
}

TEST_CASE("inexact inner solves keep the safeguard") {
  Rng rng(47);
  const auto spec = ProblemSpec::make(oracle::random_factor_cov(rng, 30, 4), 3);
  CgConfig cfg;
  cfg.inexact_inner = true;
  cfg.admm_max_iter = 20;
  const CgResult res = solve_cg(spec, cfg);
  for (size_t k = 1; k < res.trace.size(); ++k)
    CHECK(res.trace[k].value <= res.trace[k - 1].value);
  check_solution(spec, res.solution);
  CgConfig strict;
  strict.admm_max_iter = 2;
  CHECK_THROWS_AS(solve_cg(spec, strict), ConvergenceError);
}

}  // TEST_SUITE
