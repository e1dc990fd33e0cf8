#include "cfa/model.hpp"

#include <cmath>
#include <string>

#include "cfa/errors.hpp"

namespace cfa {

ProblemSpec ProblemSpec::make(SymMatrix sigma, int rank, double q, double cg_tol,
                              double admm_tol_factor) {
  const Eigen::Index p = sigma.dim();
  if (p < 1) throw InputError("Sigma must be at least 1x1");
  if (rank < 0 || rank >= p) throw InputError("rank must satisfy 0 <= r < p");
  if (!(q >= 1.0)) throw InputError("q must be >= 1");
  if (!(cg_tol > 0.0) || !(admm_tol_factor > 0.0)) throw InputError("tolerances must be positive");
  const Eigen::VectorXd lam = sym_eigenvalues(sigma);
  const double scale = std::max(1.0, lam(0));
  if (lam(p - 1) < -kPsdTol * scale)
    throw NotPSDError("Sigma is not PSD (lambda_min = " + std::to_string(lam(p - 1)) + ")");
  ProblemSpec s;
  s.sigma = std::move(sigma);
  s.rank = rank;
  s.q = q;
  s.cg_tol = cg_tol;
  s.admm_tol_factor = admm_tol_factor;
  return s;
}

double objective_fq(const SymMatrix& sigma, int r, double q, const PhiVec& phi) {
  const Eigen::VectorXd lam = sym_eigenvalues(sigma.minus_diag(phi));
  const Eigen::Index p = lam.size();
  if (lam(p - 1) < -kFeasTol)
    throw InfeasibleError("Sigma - diag(phi) has lambda_min = " + std::to_string(lam(p - 1)));
  if (r >= p) return 0.0;
  const Eigen::VectorXd tail = lam.tail(p - r).cwiseMax(0.0);
  if (q == 1.0) return tail.sum();
  return tail.array().pow(q).sum();
}

double objective_fq(const ProblemSpec& spec, const PhiVec& phi) {
  return objective_fq(spec.sigma, spec.rank, spec.q, phi);
}

SymMatrix recover_theta(const ProblemSpec& spec, const PhiVec& phi) {
  const Feasibility f = check_feasible(spec.sigma, phi);
  if (!f.feasible) throw InfeasibleError("recover_theta: phi is infeasible");
  return best_rank_r(spec.sigma.minus_diag(phi), spec.rank);
}

Feasibility check_feasible(const SymMatrix& sigma, const PhiVec& phi, double tol) {
  Feasibility f;
  if (phi.size() != sigma.dim()) throw InputError("phi length does not match Sigma");
  f.min_phi = phi.minCoeff();
  const Eigen::VectorXd lam = sym_eigenvalues(sigma.minus_diag(phi));
  f.lambda_min = lam(lam.size() - 1);
  f.feasible = f.min_phi >= -tol && f.lambda_min >= -tol;
  return f;
}

Solution make_solution(const ProblemSpec& spec, const PhiVec& phi, std::optional<SymMatrix> w) {
  Solution s;
  s.phi = phi;
  s.theta = best_rank_r(spec.sigma.minus_diag(phi), spec.rank);
  s.objective = objective_fq(spec, phi);
  s.w = std::move(w);
  return s;
}

int numerical_rank(const SymMatrix& a, double rel_tol) {
  const Eigen::VectorXd lam = sym_eigenvalues(a);
  if (lam.size() == 0) return 0;
  const double cut = rel_tol * std::max(lam(0), 0.0);
  int k = 0;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) > cut && lam(i) > 0.0) ++k;
  return k;
}

PhiVec repair_phi_shift(const SymMatrix& sigma, const PhiVec& phi) {
  PhiVec out = phi.cwiseMax(0.0);
  const Eigen::VectorXd lam = sym_eigenvalues(sigma.minus_diag(out));
  const double lmin = lam(lam.size() - 1);
  if (lmin >= 0.0) return out;
  // A few ulps of slack so the shifted matrix lands on the PSD side after rounding.
  const double t = -lmin * (1.0 + 1e-12) + 1e-15 * std::max(1.0, std::abs(lam(0)));
  return (out.array() - t).cwiseMax(0.0).matrix();
}

}  // namespace cfa
