#pragma once

#include <limits>
#include <optional>

#include <Eigen/Core>

#include "cfa/linalg.hpp"
#include "cfa/model.hpp"
#include "cfa/weyl_bounds.hpp"

namespace cfa {

/// Convex envelope of -x*y on [0,1] x [l,u]: max{-u x, l - l x - y}.
double envelope_value(double x, double y, double l, double u);

/// min <W,Sigma> - sum z  s.t.  W in Psi_{p,p-r}, Sigma - diag(phi) PSD, phi >= l,
///   z_i <= u_i W_ii,  z_i <= phi_i + l_i W_ii - l_i.
struct NodeRelaxation {
  SymMatrix sigma;
  int rank = 0;
  BoxBounds box;
};

/// Dual multipliers of the node relaxation.
///   mu, sigma: envelope multipliers (mu + sigma = 1 at feasibility)
///   p_mat:     multiplier of Sigma - diag(phi) PSD
///   f_l, f_u:  multipliers of phi >= l and phi <= u
///   q, n_mat:  multipliers of Tr(W) = p - r and W <= I
struct DualPoint {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd p_mat;
  Eigen::VectorXd f_l;
  Eigen::VectorXd f_u;
  double q = 0.0;
  Eigen::MatrixXd n_mat;
};

/// Makes the candidate exactly dual feasible (f_u, then mu/sigma, then f_l, then q) and
/// returns its objective (p-r) q - Tr(N) - <P, Sigma - diag(l)>. Repairs `dual` in place.
double dual_repair(DualPoint& dual, const NodeRelaxation& rel);

/// Best dual value for fixed (mu, P): the (q, N) part is solved exactly by the Fan
/// eigenvalue sum of Sigma - diag(u) + diag(mu (u - l)). mu is clipped into [0, min(1, P_ii)].
double dual_bound(const Eigen::VectorXd& mu, const Eigen::MatrixXd& p_mat,
                  const NodeRelaxation& rel);

/// Splitting-solver state reusable across nodes with the same Sigma and rank.
struct NodeWarmState {
  Eigen::MatrixXd y_w, v_w;      // W in Psi
  Eigen::MatrixXd y_s, v_s;      // Sigma - diag(phi) PSD
  Eigen::MatrixXd y_e, v_e;      // p x 3 envelope blocks (W_ii, phi_i, z_i)
  double rho = 1.0;
};

enum class NodeStatus { Solved, Degraded, Infeasible };

struct NodeConfig {
  double tol = 1e-3;
  int max_iter = 20000;
  int check_every = 10;
  /// Stop as soon as the certified bound reaches this value.
  double cutoff = std::numeric_limits<double>::infinity();
};

struct NodeResult {
  double lower_bound = -std::numeric_limits<double>::infinity();
  double primal_value = 0.0;
  PhiVec primal_phi;       // clamped into the box
  SymMatrix primal_w;
  Eigen::VectorXd primal_z;
  NodeStatus status = NodeStatus::Degraded;
  int iterations = 0;
  NodeWarmState warm;
};

NodeResult solve_node(const NodeRelaxation& rel, const NodeConfig& cfg = {},
                      const NodeWarmState* warm = nullptr);

/// Feasible point near phi_approx improved by the concave CG scheme; returns (phi, f_1(phi)).
std::pair<PhiVec, double> polish_incumbent(const PhiVec& phi_approx, const ProblemSpec& spec);

const char* to_string(NodeStatus s);

}  // namespace cfa
