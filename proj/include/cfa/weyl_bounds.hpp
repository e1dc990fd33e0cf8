#pragma once

#include <limits>

#include <Eigen/Core>

#include "cfa/linalg.hpp"

namespace cfa {

/// Box [lower, upper] on phi.
struct BoxBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index dim() const { return lower.size(); }
  bool valid() const;
  /// Product of interval lengths.
  double volume() const;
};

/// Eigenvalues below kUFloor * lambda_max are floored before inversion in compute_u.
inline constexpr double kUFloor = 1e-10;

/// u_i = max{x : Sigma - x e_i e_i' PSD} = min{m' Sigma m : m_i = 1}.
/// Every phi in {phi >= 0, Sigma - diag(phi) PSD} satisfies phi <= u.
Eigen::VectorXd compute_u(const SymMatrix& sigma);

/// sum_{i>r} max{lambda_i(Sigma - diag(upper)), 0}: a lower bound on the trailing-eigenvalue
/// objective over every feasible phi <= upper.
double weyl_lower_bound(const SymMatrix& sigma, const Eigen::VectorXd& upper, int r);

/// True when the node cannot improve the incumbent z_f by more than tol.
bool prune_test(double weyl_bound, double z_f, double tol);
bool prune_test(const SymMatrix& sigma, const BoxBounds& node, int r, double z_f, double tol);

struct TightenResult {
  BoxBounds box;
  /// Smallest Weyl bound over the discarded slabs (+inf when nothing was discarded).
  double discarded_bound = std::numeric_limits<double>::infinity();
};

/// Raises lower bounds using Weyl pruning on a grid of `grid_points` interior values per coordinate.
TightenResult tighten_bounds(const SymMatrix& sigma, const BoxBounds& node, int r, double z_f,
                             double tol, int grid_points = 20);

}  // namespace cfa
