#pragma once

#include <optional>

#include <Eigen/Core>

#include "cfa/linalg.hpp"
#include "cfa/model.hpp"

namespace cfa {

/// sum_i (c_i phi_i^2 + d_i phi_i), c >= 0.
struct QuadDiagObjective {
  Eigen::VectorXd c;
  Eigen::VectorXd d;

  double value(const PhiVec& phi) const;
};

/// ADMM iterate for the splitting Lambda = Sigma - diag(phi). nu is the unscaled dual.
struct AdmmState {
  PhiVec phi;
  Eigen::MatrixXd lambda;
  Eigen::MatrixXd nu;
  double rho = 1.0;
};

struct AdmmConfig {
  double tol = 1e-9;
  int max_iter = 50000;
  double rho = 1.0;
  bool adapt_rho = true;
  double balance_ratio = 10.0;  // residual ratio that triggers a rho change
  double rho_factor = 2.0;
  /// When false, hitting max_iter returns the last iterate with converged = false.
  bool throw_on_cap = true;
};

struct AdmmResult {
  PhiVec phi;
  AdmmState state;
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  bool converged = true;
};

/// Closed-form minimizer of the augmented Lagrangian in phi_i:
/// rho/(rho + 2c) * max{(sigma_ii - lambda_ii) - (d + nu_ii)/rho, 0}.
double phi_update_coordinate(double rho, double c, double d, double sigma_ii, double lambda_ii,
                             double nu_ii);

/// Minimizes sum_i (c_i phi_i^2 + d_i phi_i) over {phi >= 0, Sigma - diag(phi) PSD}.
/// Throws ConvergenceError (carrying the best iterate) when max_iter is exhausted.
AdmmResult solve_phi_subproblem(const SymMatrix& sigma, const QuadDiagObjective& obj,
                                const AdmmConfig& cfg, const AdmmState* warm = nullptr);

/// Quadratic/linear coefficients of the phi-subproblem at fixed W.
QuadDiagObjective concave_cg_objective(const SymMatrix& sigma, const SymMatrix& w, double q);

struct MtfaResult {
  PhiVec phi;
  SymMatrix theta;
  int iterations = 0;
};

/// Minimum trace factor analysis: min Tr(Theta) s.t. Theta PSD, Sigma = Theta + diag(phi), phi >= 0.
MtfaResult solve_mtfa(const SymMatrix& sigma, double tol, int max_iter = 50000);

}  // namespace cfa
