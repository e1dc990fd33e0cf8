#pragma once

#include <optional>

#include <Eigen/Core>

#include "cfa/linalg.hpp"

namespace cfa {

/// Eigenvalues of Theta above kRankTol * lambda_1 count toward its numerical rank.
inline constexpr double kRankTol = 1e-8;
/// Absolute cutoff used when reporting the rank of an MTFA estimate.
inline constexpr double kMtfaRankTol = 1e-5;
/// Default absolute tolerance on lambda_min(Sigma - diag(phi)).
inline constexpr double kFeasTol = 1e-6;

/// diag(Phi): the vector of unique variances.
using PhiVec = Eigen::VectorXd;

/// One rank-constrained factor-analysis problem: Sigma, target rank r, norm exponent q
/// and the conditional-gradient / inner ADMM tolerances.
struct ProblemSpec {
  SymMatrix sigma;
  int rank = 0;
  double q = 1.0;
  double cg_tol = 1e-5;
  double admm_tol_factor = 1e-4;

  /// Validates the invariants; throws InputError / NotPSDError.
  static ProblemSpec make(SymMatrix sigma, int rank, double q = 1.0, double cg_tol = 1e-5,
                          double admm_tol_factor = 1e-4);

  Eigen::Index dim() const { return sigma.dim(); }
  double admm_tol() const { return cg_tol * admm_tol_factor; }
};

struct Solution {
  PhiVec phi;
  SymMatrix theta;
  double objective = 0.0;
  std::optional<SymMatrix> w;
};

struct Feasibility {
  bool feasible = false;
  double min_phi = 0.0;     // min_i phi_i
  double lambda_min = 0.0;  // lambda_min(Sigma - diag(phi))
};

/// sum_{i>r} lambda_i(Sigma - diag(phi))^q. Throws InfeasibleError if lambda_min < -kFeasTol.
double objective_fq(const ProblemSpec& spec, const PhiVec& phi);

/// Same objective on a bare (Sigma, r, q) triple; used where no ProblemSpec is at hand.
double objective_fq(const SymMatrix& sigma, int r, double q, const PhiVec& phi);

/// Theta = best rank-r approximation of Sigma - diag(phi).
SymMatrix recover_theta(const ProblemSpec& spec, const PhiVec& phi);

Feasibility check_feasible(const SymMatrix& sigma, const PhiVec& phi, double tol = kFeasTol);

/// Completes a Solution (theta, objective) from a feasible phi.
Solution make_solution(const ProblemSpec& spec, const PhiVec& phi,
                       std::optional<SymMatrix> w = std::nullopt);

/// Number of eigenvalues above rel_tol * max(lambda_1, 0).
int numerical_rank(const SymMatrix& a, double rel_tol = kRankTol);

/// Shrinks phi to make Sigma - diag(phi) PSD: phi <- max(phi - t, 0) with t = max(0, -lambda_min).
PhiVec repair_phi_shift(const SymMatrix& sigma, const PhiVec& phi);

}  // namespace cfa
