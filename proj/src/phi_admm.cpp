#include "cfa/phi_admm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cfa/errors.hpp"

namespace cfa {

double QuadDiagObjective::value(const PhiVec& phi) const {
  return (c.array() * phi.array().square() + d.array() * phi.array()).sum();
}

double phi_update_coordinate(double rho, double c, double d, double sigma_ii, double lambda_ii,
                             double nu_ii) {
  return rho / (rho + 2.0 * c) * std::max((sigma_ii - lambda_ii) - (d + nu_ii) / rho, 0.0);
}

namespace {

Eigen::MatrixXd psd_part(const Eigen::MatrixXd& a) {
  const EigenPairs e = sym_eigen(a);
  const Eigen::Index p = a.rows();
  Eigen::Index k = 0;
  while (k < p && e.values(k) > 0.0) ++k;
  if (k == 0) return Eigen::MatrixXd::Zero(p, p);
  const Eigen::MatrixXd v = e.vectors.leftCols(k) * e.values.head(k).cwiseSqrt().asDiagonal();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
  out.selfadjointView<Eigen::Lower>().rankUpdate(v);
  return out.selfadjointView<Eigen::Lower>();
}

double spectral_norm(const Eigen::MatrixXd& sym) {
  const Eigen::VectorXd ev = sym_eigenvalues(SymMatrix(sym));
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

}  // namespace

AdmmResult solve_phi_subproblem(const SymMatrix& sigma, const QuadDiagObjective& obj,
                                const AdmmConfig& cfg, const AdmmState* warm) {
  const Eigen::Index p = sigma.dim();
  if (obj.c.size() != p || obj.d.size() != p) throw InputError("objective size mismatch");
  if ((obj.c.array() < 0.0).any()) throw InputError("quadratic coefficients must be >= 0");
  if (!(cfg.tol > 0.0)) throw InputError("ADMM tolerance must be positive");
  const Eigen::MatrixXd& S = sigma.mat();

  AdmmState st;
  if (warm != nullptr && warm->phi.size() == p) {
    st = *warm;
  } else {
    st.phi = PhiVec::Zero(p);
    st.lambda = psd_part(S);
    st.nu = Eigen::MatrixXd::Zero(p, p);
    st.rho = cfg.rho;
  }
  if (!(st.rho > 0.0)) st.rho = cfg.rho;

  const Eigen::VectorXd sdiag = S.diagonal();
  double prev_obj = obj.value(st.phi);
  double r_prim = std::numeric_limits<double>::infinity();
  double r_dual = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd residual(p, p);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    for (Eigen::Index i = 0; i < p; ++i)
      st.phi(i) = phi_update_coordinate(st.rho, obj.c(i), obj.d(i), sdiag(i), st.lambda(i, i),
                                        st.nu(i, i));

    Eigen::MatrixXd target = S - st.nu / st.rho;
    target.diagonal() -= st.phi;
    const Eigen::VectorXd old_diag = st.lambda.diagonal();
    st.lambda = psd_part(target);

    residual = st.lambda - S;
    residual.diagonal() += st.phi;
    st.nu += st.rho * residual;

    r_prim = residual.norm();
    r_dual = st.rho * (st.lambda.diagonal() - old_diag).norm();
    const double cur_obj = obj.value(st.phi);
    const double rel = std::abs(cur_obj - prev_obj) / std::max(1.0, std::abs(cur_obj));
    prev_obj = cur_obj;

    // The primal test uses the spectral norm; the Frobenius norm bounds it within sqrt(p).
    double r_test = r_prim;
    if (rel <= cfg.tol && r_test > cfg.tol && r_test <= std::sqrt(static_cast<double>(p)) * cfg.tol)
      r_test = spectral_norm(residual);
    if (r_test <= cfg.tol && rel <= cfg.tol) {
      AdmmResult res;
      res.phi = st.phi;
      res.objective = cur_obj;
      res.iterations = it;
      res.primal_residual = r_test;
      res.state = std::move(st);
      return res;
    }

    if (cfg.adapt_rho && it % 10 == 0) {
      if (r_prim > cfg.balance_ratio * r_dual) st.rho *= cfg.rho_factor;
      else if (r_dual > cfg.balance_ratio * r_prim) st.rho /= cfg.rho_factor;
    }
  }
  if (!cfg.throw_on_cap) {
    AdmmResult res;
    res.phi = st.phi;
    res.objective = obj.value(st.phi);
    res.iterations = cfg.max_iter;
    res.primal_residual = r_prim;
    res.converged = false;
    res.state = std::move(st);
    return res;
  }
  throw ConvergenceError("phi-subproblem ADMM hit its iteration cap (primal residual " +
                             std::to_string(r_prim) + ")",
                         st.phi, cfg.max_iter);
}

QuadDiagObjective concave_cg_objective(const SymMatrix& sigma, const SymMatrix& w, double q) {
  QuadDiagObjective o;
  const Eigen::Index p = sigma.dim();
  if (q == 1.0) {
    o.c = Eigen::VectorXd::Zero(p);
    o.d = -w.mat().diagonal();
  } else if (q == 2.0) {
    o.c = w.mat().diagonal();
    o.d = -2.0 * (w.mat().cwiseProduct(sigma.mat())).colwise().sum().transpose();
  } else {
    throw InputError("the marginal (concave) phi-subproblem is only quadratic for q in {1, 2}");
  }
  return o;
}

MtfaResult solve_mtfa(const SymMatrix& sigma, double tol, int max_iter) {
  const Eigen::Index p = sigma.dim();
  QuadDiagObjective o{Eigen::VectorXd::Zero(p), -Eigen::VectorXd::Ones(p)};
  AdmmConfig cfg;
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  const AdmmResult r = solve_phi_subproblem(sigma, o, cfg);
  MtfaResult out;
  out.phi = repair_phi_shift(sigma, r.phi);
  out.theta = sigma.minus_diag(out.phi);
  out.iterations = r.iterations;
  return out;
}

}  // namespace cfa
