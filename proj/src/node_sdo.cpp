#include "cfa/node_sdo.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "cfa/cg_solvers.hpp"
#include "cfa/errors.hpp"

namespace cfa {

namespace {

// Normals and offsets of the three halfspaces g'(a,b,c) <= h describing
// { c <= u a,  c <= b + l a - l,  b >= l }.
struct EnvelopeSet {
  Eigen::Matrix3d g;
  Eigen::Vector3d h;
};

EnvelopeSet envelope_set(double l, double u) {
  EnvelopeSet s;
  s.g << -u, 0.0, 1.0,
         -l, -1.0, 1.0,
         0.0, -1.0, 0.0;
  s.h << 0.0, -l, -l;
  return s;
}

// Exact Euclidean projection onto the polyhedron by enumerating active sets.
Eigen::Vector3d project_envelope(const Eigen::Vector3d& x0, double l, double u) {
  const EnvelopeSet s = envelope_set(l, u);
  const double scale = 1.0 + x0.cwiseAbs().maxCoeff() + u;
  const double feas_tol = 1e-12 * scale;
  auto feasible = [&](const Eigen::Vector3d& x) {
    return ((s.g * x - s.h).array() <= feas_tol).all();
  };
  if (feasible(x0)) return x0;
  Eigen::Vector3d best = Eigen::Vector3d::Zero();
  double best_dist = std::numeric_limits<double>::infinity();
  for (int mask = 1; mask < 8; ++mask) {
    std::array<int, 3> rows{};
    int k = 0;
    for (int j = 0; j < 3; ++j)
      if (mask & (1 << j)) rows[k++] = j;
    Eigen::MatrixXd g(k, 3);
    Eigen::VectorXd h(k);
    for (int j = 0; j < k; ++j) {
      g.row(j) = s.g.row(rows[j]);
      h(j) = s.h(rows[j]);
    }
    const Eigen::MatrixXd ggt = g * g.transpose();
    const Eigen::VectorXd resid = g * x0 - h;
    const Eigen::VectorXd mult = ggt.completeOrthogonalDecomposition().solve(resid);
    if ((mult.array() < -1e-12).any()) continue;
    const Eigen::Vector3d x = x0 - g.transpose() * mult;
    if (!feasible(x)) continue;
    const double d = (x - x0).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = x;
    }
  }
  if (!std::isfinite(best_dist)) {
    // Unreachable for consistent data; fall back to the vertex (0, l, 0).
    best << 0.0, l, 0.0;
  }
  return best;
}

double fan_trailing(const Eigen::MatrixXd& c, int r) {
  return trailing_sum(sym_eigenvalues(c), r);
}

Eigen::MatrixXd c_matrix(const NodeRelaxation& rel, const Eigen::VectorXd& mu) {
  Eigen::MatrixXd c = rel.sigma.mat();
  const Eigen::VectorXd& l = rel.box.lower;
  const Eigen::VectorXd& u = rel.box.upper;
  c.diagonal() += -u + mu.cwiseProduct(u - l);
  return c;
}

double sigma_minus_l_inner(const NodeRelaxation& rel, const Eigen::MatrixXd& p_mat) {
  Eigen::MatrixXd s = rel.sigma.mat();
  s.diagonal() -= rel.box.lower;
  return p_mat.cwiseProduct(s).sum();
}

NodeWarmState cold_state(const NodeRelaxation& rel) {
  const Eigen::Index p = rel.sigma.dim();
  const Eigen::VectorXd& l = rel.box.lower;
  const Eigen::VectorXd& u = rel.box.upper;
  NodeWarmState st;
  const double wdiag = static_cast<double>(p - rel.rank) / static_cast<double>(p);
  st.y_w = wdiag * Eigen::MatrixXd::Identity(p, p);
  st.v_w = Eigen::MatrixXd::Zero(p, p);
  st.y_s = psd_project(rel.sigma.minus_diag(l)).mat();
  st.v_s = Eigen::MatrixXd::Zero(p, p);
  st.y_e.resize(p, 3);
  for (Eigen::Index i = 0; i < p; ++i) {
    st.y_e(i, 0) = wdiag;
    st.y_e(i, 1) = l(i);
    st.y_e(i, 2) = std::min(u(i) * wdiag, l(i) * wdiag);
  }
  st.v_e = Eigen::MatrixXd::Zero(p, 3);
  st.rho = 1.0;
  return st;
}

bool warm_compatible(const NodeWarmState& w, Eigen::Index p) {
  return w.y_w.rows() == p && w.y_s.rows() == p && w.y_e.rows() == p && w.v_e.rows() == p &&
         w.rho > 0.0;
}

}  // namespace

double envelope_value(double x, double y, double l, double u) {
  return std::max(-u * x, l - l * x - y);
}

const char* to_string(NodeStatus s) {
  switch (s) {
    case NodeStatus::Solved: return "solved";
    case NodeStatus::Degraded: return "degraded";
    case NodeStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

double dual_repair(DualPoint& d, const NodeRelaxation& rel) {
  const Eigen::Index p = rel.sigma.dim();
  if (d.mu.size() != p) d.mu = Eigen::VectorXd::Zero(p);
  if (d.sigma.size() != p) d.sigma = Eigen::VectorXd::Ones(p) - d.mu;
  if (d.p_mat.rows() != p) d.p_mat = Eigen::MatrixXd::Zero(p, p);
  if (d.n_mat.rows() != p) d.n_mat = Eigen::MatrixXd::Zero(p, p);

  // (a) the upper box multipliers are dropped.
  d.f_u = Eigen::VectorXd::Zero(p);

  // (b) mu, sigma >= 0 with mu + sigma = 1.
  for (Eigen::Index i = 0; i < p; ++i) {
    const double m = std::max(d.mu(i), 0.0);
    const double s = std::max(d.sigma(i), 0.0);
    const double t = m + s;
    d.mu(i) = t > 0.0 ? m / t : 0.0;
    d.sigma(i) = 1.0 - d.mu(i);
  }

  // (c) f_l from diag(P) + f_u - f_l - mu = 0; a negative f_l is fixed by lowering mu.
  d.p_mat = psd_project(SymMatrix(d.p_mat)).mat();
  d.f_l.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double pii = std::max(d.p_mat(i, i), 0.0);
    if (pii < d.mu(i)) {
      d.mu(i) = pii;
      d.sigma(i) = 1.0 - pii;
    }
    d.f_l(i) = pii - d.mu(i);
  }

  // (d) N PSD, then q small enough that C - qI + N is PSD.
  d.n_mat = psd_project(SymMatrix(d.n_mat)).mat();
  const Eigen::MatrixXd cn = c_matrix(rel, d.mu) + d.n_mat;
  const Eigen::VectorXd lam = sym_eigenvalues(cn);
  d.q = std::min(d.q, lam(lam.size() - 1));

  return static_cast<double>(p - rel.rank) * d.q - d.n_mat.trace() -
         sigma_minus_l_inner(rel, d.p_mat);
}

double dual_bound(const Eigen::VectorXd& mu, const Eigen::MatrixXd& p_mat,
                  const NodeRelaxation& rel) {
  const Eigen::MatrixXd p_psd = psd_project(SymMatrix(p_mat)).mat();
  Eigen::VectorXd m(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    m(i) = std::clamp(mu(i), 0.0, std::min(1.0, std::max(p_psd(i, i), 0.0)));
  return fan_trailing(c_matrix(rel, m), rel.rank) - sigma_minus_l_inner(rel, p_psd);
}

NodeResult solve_node(const NodeRelaxation& rel, const NodeConfig& cfg, const NodeWarmState* warm) {
  const Eigen::Index p = rel.sigma.dim();
  if (!rel.box.valid() || rel.box.dim() != p) throw InputError("solve_node: invalid box");
  if (rel.rank < 0 || rel.rank >= p) throw InputError("solve_node: rank out of range");
  const Eigen::VectorXd& l = rel.box.lower;
  const Eigen::VectorXd& u = rel.box.upper;
  const Eigen::MatrixXd& sig = rel.sigma.mat();

  NodeResult out;
  out.primal_phi = l;
  out.primal_w = SymMatrix::zero(p);
  out.primal_z = Eigen::VectorXd::Zero(p);

  // phi >= l with Sigma - diag(l) indefinite leaves nothing feasible.
  {
    const Eigen::VectorXd lam = sym_eigenvalues(rel.sigma.minus_diag(l));
    if (lam(p - 1) < -1e-9 * std::max(1.0, lam(0))) {
      out.lower_bound = std::numeric_limits<double>::infinity();
      out.status = NodeStatus::Infeasible;
      out.warm = warm && warm_compatible(*warm, p) ? *warm : cold_state(rel);
      return out;
    }
  }

  NodeWarmState st = warm && warm_compatible(*warm, p) ? *warm : cold_state(rel);
  const double k_trace = static_cast<double>(p - rel.rank);
  const Eigen::VectorXd width = u - l;
  const double sig_scale = 1.0 + sig.norm();

  Eigen::MatrixXd w(p, p);
  Eigen::VectorXd phi(p), z(p);
  Eigen::MatrixXd ex(p, 3);
  double best_lb = -std::numeric_limits<double>::infinity();
  double pres = 0.0, dres = 0.0, pobj = 0.0;
  out.status = NodeStatus::Degraded;

  int it = 0;
  for (it = 1; it <= cfg.max_iter; ++it) {
    const double rho = st.rho;
    // x-update (closed form).
    const Eigen::MatrixXd t_w = st.y_w - st.v_w;
    const Eigen::MatrixXd t_s = st.y_s - st.v_s;
    const Eigen::MatrixXd t_e = st.y_e - st.v_e;
    w = t_w - sig / rho;
    for (Eigen::Index i = 0; i < p; ++i) {
      w(i, i) = 0.5 * (t_w(i, i) + t_e(i, 0) - sig(i, i) / rho);
      phi(i) = 0.5 * (sig(i, i) - t_s(i, i) + t_e(i, 1));
      z(i) = t_e(i, 2) + 1.0 / rho;
    }
    Eigen::MatrixXd smp = sig;
    smp.diagonal() -= phi;
    for (Eigen::Index i = 0; i < p; ++i) {
      ex(i, 0) = w(i, i);
      ex(i, 1) = phi(i);
      ex(i, 2) = z(i);
    }

    // y-update (projections).
    const Eigen::MatrixXd yw_old = st.y_w, ys_old = st.y_s, ye_old = st.y_e;
    st.y_w = project_spectrahedron(SymMatrix(Eigen::MatrixXd(w + st.v_w)), k_trace).mat();
    st.y_s = psd_project(SymMatrix(Eigen::MatrixXd(smp + st.v_s))).mat();
    for (Eigen::Index i = 0; i < p; ++i) {
      const Eigen::Vector3d pt = ex.row(i).transpose() + st.v_e.row(i).transpose();
      st.y_e.row(i) = project_envelope(pt, l(i), u(i)).transpose();
    }

    // Dual update.
    const Eigen::MatrixXd r_w = w - st.y_w;
    const Eigen::MatrixXd r_s = smp - st.y_s;
    const Eigen::MatrixXd r_e = ex - st.y_e;
    st.v_w += r_w;
    st.v_s += r_s;
    st.v_e += r_e;

    if (it % cfg.check_every == 0 || it == cfg.max_iter) {
      pres = std::sqrt(r_w.squaredNorm() + r_s.squaredNorm() + r_e.squaredNorm());
      dres = rho * std::sqrt((st.y_w - yw_old).squaredNorm() + (st.y_s - ys_old).squaredNorm() +
                             (st.y_e - ye_old).squaredNorm());

      const Eigen::MatrixXd p_mat = -rho * st.v_s;
      Eigen::VectorXd mu(p);
      for (Eigen::Index i = 0; i < p; ++i) {
        const double lam_a = rho * st.v_e(i, 0);
        const double lam_c = rho * st.v_e(i, 2);
        mu(i) = width(i) > 1e-12 ? (lam_a + u(i) * lam_c) / width(i) : 0.0;
      }
      const double lb = dual_bound(mu, p_mat, rel);
      best_lb = std::max(best_lb, lb);
      pobj = st.y_w.cwiseProduct(sig).sum() - st.y_e.col(2).sum();

      if (best_lb >= cfg.cutoff) {
        out.status = NodeStatus::Solved;
        break;
      }
      const double gap = pobj - best_lb;
      if (pres <= cfg.tol * sig_scale && gap <= cfg.tol * (1.0 + std::abs(pobj))) {
        out.status = NodeStatus::Solved;
        break;
      }

      // Residual balancing on rho; v is scaled so that rho * v is unchanged.
      if (it % (5 * cfg.check_every) == 0) {
        if (pres > 10.0 * dres) {
          st.rho *= 2.0;
          st.v_w /= 2.0;
          st.v_s /= 2.0;
          st.v_e /= 2.0;
        } else if (dres > 10.0 * pres) {
          st.rho /= 2.0;
          st.v_w *= 2.0;
          st.v_s *= 2.0;
          st.v_e *= 2.0;
        }
      }
    }
  }

  out.iterations = std::min(it, cfg.max_iter);
  out.lower_bound = best_lb;
  out.primal_value = pobj;
  out.primal_phi = phi.cwiseMax(l).cwiseMin(u);
  out.primal_w = SymMatrix(st.y_w);
  out.primal_z = st.y_e.col(2);
  out.warm = std::move(st);
  return out;
}

std::pair<PhiVec, double> polish_incumbent(const PhiVec& phi_approx, const ProblemSpec& spec) {
  const PhiVec start = scale_to_feasible(spec.sigma, phi_approx.cwiseMax(0.0));
  const double f_start = objective_fq(spec, start);
  CgConfig cfg;
  if (spec.q != 1.0 && spec.q != 2.0) cfg.algorithm = CgAlgorithm::Smooth;
  try {
    const CgResult res = solve_cg(spec, cfg, CgInit{start, std::nullopt});
    if (res.solution.objective < f_start) return {res.solution.phi, res.solution.objective};
  } catch (const ConvergenceError&) {
    // The feasible start is still a valid incumbent.
  }
  return {start, f_start};
}

}  // namespace cfa
