#pragma once

// Independent reference computations for tests. These use Eigen directly and never call the
// library routines they are meant to check.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cfa/linalg.hpp"
#include "cfa/rng.hpp"

namespace oracle {

inline Eigen::VectorXd eigvals_desc(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

inline double lambda_min(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Sum of the p - r smallest eigenvalues.
inline double trailing(const Eigen::MatrixXd& a, int r) {
  const Eigen::VectorXd v = eigvals_desc(a);
  return v.tail(v.size() - r).sum();
}

inline Eigen::MatrixXd random_sym(cfa::Rng& rng, int p) {
  Eigen::MatrixXd a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = rng.normal();
  return 0.5 * (a + a.transpose());
}

inline Eigen::MatrixXd random_psd(cfa::Rng& rng, int p, int k) {
  Eigen::MatrixXd v(p, k);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < k; ++j) v(i, j) = rng.normal();
  return v * v.transpose();
}

// Low-rank plus diagonal covariance rescaled to unit diagonal.
inline cfa::SymMatrix random_factor_cov(cfa::Rng& rng, int p, int k) {
  Eigen::MatrixXd s = random_psd(rng, p, k);
  for (int i = 0; i < p; ++i) s(i, i) += 0.2 + rng.uniform();
  const Eigen::VectorXd d = s.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd c = d.asDiagonal() * s * d.asDiagonal();
  c.diagonal().setOnes();
  return cfa::SymMatrix(c);
}

inline bool feasible(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& phi, double tol) {
  if ((phi.array() < -tol).any()) return false;
  Eigen::MatrixXd m = sigma;
  m.diagonal() -= phi;
  return lambda_min(m) >= -tol;
}

// Largest t with sigma - diag(head, t) PSD, via the Schur complement on the leading block.
// Returns -inf when the leading block itself is not PSD.
inline double last_coordinate_cap(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& head) {
  const Eigen::Index p = sigma.rows();
  Eigen::MatrixXd a = sigma.topLeftCorner(p - 1, p - 1);
  a.diagonal() -= head;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXd lam = es.eigenvalues();
  if (lam(0) < -1e-12) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd b = sigma.col(p - 1).head(p - 1);
  const Eigen::VectorXd proj = es.eigenvectors().transpose() * b;
  double schur = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > 1e-12) {
      schur += proj(i) * proj(i) / lam(i);
    } else if (std::abs(proj(i)) > 1e-9) {
      return -std::numeric_limits<double>::infinity();  // b leaves the range of a
    }
  }
  return sigma(p - 1, p - 1) - schur;
}

// Minimum of the trailing-eigenvalue objective over a feasibility-filtered grid on the box
// [lower, upper] with `points` values per axis. The objective is concave in phi, so along the
// last axis the minimum over a feasible interval sits at an endpoint; the far endpoint is taken
// exactly from the Schur complement, which only adds feasible points to the grid.
struct GridResult {
  double value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd phi;
};

inline GridResult grid_minimum(const Eigen::MatrixXd& sigma, int r, const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper, int points) {
  const Eigen::Index p = sigma.rows();
  GridResult best;
  std::vector<int> idx(p - 1, 0);
  Eigen::VectorXd phi(p);
  auto eval = [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXd m = sigma;
    m.diagonal() -= x;
    const double v = trailing(m, r);
    if (v < best.value) {
      best.value = v;
      best.phi = x;
    }
  };
  while (true) {
    for (Eigen::Index i = 0; i + 1 < p; ++i) {
      const double t = points > 1 ? static_cast<double>(idx[i]) / (points - 1) : 0.0;
      phi(i) = lower(i) + t * (upper(i) - lower(i));
    }
    const double cap = last_coordinate_cap(sigma, phi.head(p - 1));
    const double lo = lower(p - 1);
    const double hi = std::min(upper(p - 1), cap);
    bool head_feasible = cap >= lo - 1e-12;
    if (head_feasible) {
      phi(p - 1) = lo;
      eval(phi);
      if (hi > lo) {
        phi(p - 1) = hi;
        eval(phi);
      }
    }
    // Advance the odometer. Feasibility is monotone in each coordinate, so once the head is
    // infeasible the innermost axis can skip to its end.
    Eigen::Index k = p - 2;
    if (!head_feasible) idx[k] = points - 1;
    while (k >= 0 && ++idx[k] >= points) {
      idx[k] = 0;
      --k;
    }
    if (k < 0) break;
  }
  return best;
}

inline GridResult grid_minimum(const Eigen::MatrixXd& sigma, int r, const Eigen::VectorXd& upper,
                               int points) {
  return grid_minimum(sigma, r, Eigen::VectorXd::Zero(sigma.rows()), upper, points);
}

// Grid search followed by zoomed grids around the incumbent. Every evaluated point is feasible,
// so the value stays an upper bound on the box minimum while approaching it.
inline GridResult grid_minimum_refined(const Eigen::MatrixXd& sigma, int r,
                                       const Eigen::VectorXd& upper, int points, int rounds,
                                       int zoom_points = 41) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sigma.rows());
  GridResult best = grid_minimum(sigma, r, zero, upper, points);
  Eigen::VectorXd step = upper / std::max(points - 1, 1);
  for (int round = 0; round < rounds && best.phi.size() > 0; ++round) {
    const Eigen::VectorXd lo = (best.phi - 2.0 * step).cwiseMax(zero);
    const Eigen::VectorXd hi = (best.phi + 2.0 * step).cwiseMin(upper);
    const GridResult local = grid_minimum(sigma, r, lo, hi, zoom_points);
    if (local.value < best.value) best = local;
    step = (hi - lo) / std::max(zoom_points - 1, 1);
  }
  return best;
}

// Uniform samples from the box [0, box] kept only when feasible.
inline std::vector<Eigen::VectorXd> rejection_sample(const Eigen::MatrixXd& sigma,
                                                     const Eigen::VectorXd& box, int count,
                                                     cfa::Rng& rng, int max_draws = 2000000) {
  std::vector<Eigen::VectorXd> out;
  const Eigen::Index p = sigma.rows();
  for (int draw = 0; draw < max_draws && static_cast<int>(out.size()) < count; ++draw) {
    Eigen::VectorXd phi(p);
    for (Eigen::Index i = 0; i < p; ++i) phi(i) = rng.uniform() * box(i);
    if (feasible(sigma, phi, 0.0)) out.push_back(phi);
  }
  return out;
}

}  // namespace oracle
