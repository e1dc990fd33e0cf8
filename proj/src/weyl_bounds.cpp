#include "cfa/weyl_bounds.hpp"

#include <algorithm>
#include <cmath>

#include "cfa/errors.hpp"

namespace cfa {

bool BoxBounds::valid() const {
  if (lower.size() != upper.size()) return false;
  return (lower.array() >= 0.0).all() && (upper.array() >= lower.array()).all();
}

double BoxBounds::volume() const { return (upper - lower).prod(); }

Eigen::VectorXd compute_u(const SymMatrix& sigma) {
  const EigenPairs e = sym_eigen(sigma);
  const Eigen::Index p = sigma.dim();
  const double top = std::max(e.values(0), 0.0);
  if (top <= 0.0) return Eigen::VectorXd::Zero(p);
  // Flooring small eigenvalues upward shrinks (Sigma^+)_ii, which can only enlarge u_i:
  // the bound stays on the valid side for near-singular Sigma.
  const double floor = kUFloor * top;
  const Eigen::VectorXd inv = e.values.cwiseMax(floor).cwiseInverse();
  Eigen::VectorXd u(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double sinv_ii = e.vectors.row(i).array().square().matrix().dot(inv);
    u(i) = std::min(1.0 / sinv_ii, sigma(i, i));
  }
  return u.cwiseMax(0.0);
}

double weyl_lower_bound(const SymMatrix& sigma, const Eigen::VectorXd& upper, int r) {
  const Eigen::VectorXd lam = sym_eigenvalues(sigma.minus_diag(upper));
  return trailing_sum(lam.cwiseMax(0.0), r);
}

bool prune_test(double weyl_bound, double z_f, double tol) { return z_f - tol < weyl_bound; }

bool prune_test(const SymMatrix& sigma, const BoxBounds& node, int r, double z_f, double tol) {
  return prune_test(weyl_lower_bound(sigma, node.upper, r), z_f, tol);
}

TightenResult tighten_bounds(const SymMatrix& sigma, const BoxBounds& node, int r, double z_f,
                             double tol, int grid_points) {
  if (!node.valid()) throw InputError("tighten_bounds: invalid box");
  TightenResult out;
  out.box = node;
  if (grid_points <= 0 || !std::isfinite(z_f)) return out;
  const Eigen::Index p = node.dim();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double lo = node.lower(j);
    const double hi = node.upper(j);
    if (!(hi > lo)) continue;
    Eigen::VectorXd trial = node.upper;
    // The Weyl bound is nonincreasing in u_j, so the admissible alphas form a prefix of the grid.
    for (int k = grid_points; k >= 1; --k) {
      const double alpha = lo + (hi - lo) * k / (grid_points + 1.0);
      trial(j) = alpha;
      const double w = weyl_lower_bound(sigma, trial, r);
      if (z_f - tol < w) {
        out.box.lower(j) = alpha;
        out.discarded_bound = std::min(out.discarded_bound, w);
        break;
      }
    }
  }
  return out;
}

}  // namespace cfa
