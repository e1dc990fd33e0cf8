#include "cfa/cg_solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "cfa/errors.hpp"
#include "cfa/rng.hpp"
#include "cfa/weyl_bounds.hpp"

namespace cfa {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Spectral data of M = (Sigma - diag(phi))^q, shared by the W-update, the objective and Delta.
struct PoweredSpectrum {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;  // of M, decreasing
};

PoweredSpectrum powered_spectrum(const SymMatrix& sigma, const PhiVec& phi, double q) {
  EigenPairs e = sym_eigen(sigma.minus_diag(phi));
  PoweredSpectrum s;
  s.values = e.values.cwiseMax(0.0);
  if (q != 1.0) s.values = s.values.array().pow(q).matrix();
  s.vectors = std::move(e.vectors);
  return s;
}

Eigen::MatrixXd trailing_projector(const Eigen::MatrixXd& vectors, int r) {
  const Eigen::Index p = vectors.rows();
  const Eigen::MatrixXd v = vectors.rightCols(p - r);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(p, p);
  w.selfadjointView<Eigen::Lower>().rankUpdate(v);
  return w.selfadjointView<Eigen::Lower>();
}

// <W, U diag(vals) U'>
double inner_with_spectrum(const Eigen::MatrixXd& w, const PoweredSpectrum& s) {
  const Eigen::MatrixXd wu = w * s.vectors;
  return (s.vectors.cwiseProduct(wu)).colwise().sum().dot(s.values);
}

// d/dphi_i Tr(W (Sigma - diag(phi))^q) via the Daleckii-Krein formula.
Eigen::VectorXd phi_gradient(const SymMatrix& sigma, const Eigen::MatrixXd& w, const PhiVec& phi,
                             double q) {
  const Eigen::Index p = sigma.dim();
  if (q == 1.0) return -w.diagonal();
  if (q == 2.0) {
    const Eigen::MatrixXd a = sigma.minus_diag(phi).mat();
    return -2.0 * (w.cwiseProduct(a)).colwise().sum().transpose();
  }
  const EigenPairs e = sym_eigen(sigma.minus_diag(phi));
  const Eigen::VectorXd lam = e.values.cwiseMax(0.0);
  Eigen::MatrixXd f(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) {
      const double a = lam(i), b = lam(j);
      f(i, j) = std::abs(a - b) > 1e-12 * std::max(1.0, std::max(a, b))
                    ? (std::pow(a, q) - std::pow(b, q)) / (a - b)
                    : q * std::pow(0.5 * (a + b), q - 1.0);
    }
  const Eigen::MatrixXd inner = (e.vectors.transpose() * w * e.vectors).cwiseProduct(f);
  const Eigen::MatrixXd full = e.vectors * inner * e.vectors.transpose();
  return -full.diagonal();
}

PhiVec default_start(const ProblemSpec& spec) {
  return scale_to_feasible(spec.sigma, 0.5 * compute_u(spec.sigma));
}

AdmmConfig inner_config(const ProblemSpec& spec, const CgConfig& cfg) {
  AdmmConfig a;
  a.tol = spec.admm_tol();
  a.max_iter = cfg.admm_max_iter;
  a.throw_on_cap = !cfg.inexact_inner;
  return a;
}

AdmmResult run_inner(const SymMatrix& sigma, const QuadDiagObjective& obj, const AdmmConfig& cfg,
                     const AdmmState* warm, int cg_iteration) {
  try {
    return solve_phi_subproblem(sigma, obj, cfg, warm);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError("conditional gradient iteration " + std::to_string(cg_iteration) +
                               ": " + e.what(),
                           e.best(), e.iterations());
  }
}

AdmmState seed_state(const SymMatrix& sigma, const PhiVec& phi) {
  AdmmState st;
  st.phi = phi;
  st.lambda = psd_project(sigma.minus_diag(phi)).mat();
  st.nu = Eigen::MatrixXd::Zero(sigma.dim(), sigma.dim());
  st.rho = 1.0;
  return st;
}

}  // namespace

const char* to_string(CgAlgorithm a) { return a == CgAlgorithm::Smooth ? "alg1" : "alg2"; }

const char* to_string(CgStatus s) {
  switch (s) {
    case CgStatus::Converged: return "converged";
    case CgStatus::Stationary: return "stationary";
    case CgStatus::IterationCap: return "iteration_cap";
  }
  return "unknown";
}

SymMatrix update_w(const SymMatrix& m, int r) {
  const Eigen::Index p = m.dim();
  if (r < 0 || r > p) throw InputError("update_w: rank out of range");
  if (r == 0) return SymMatrix::identity(p);
  const EigenPairs e = sym_eigen(m);
  return SymMatrix(trailing_projector(e.vectors, r));
}

double joint_objective(const ProblemSpec& spec, const SymMatrix& w, const PhiVec& phi) {
  return inner_with_spectrum(w.mat(), powered_spectrum(spec.sigma, phi, spec.q));
}

double stationarity_gap(const ProblemSpec& spec, const SymMatrix& w, const PhiVec& phi) {
  const PoweredSpectrum s = powered_spectrum(spec.sigma, phi, spec.q);
  return trailing_sum(s.values, spec.rank) - inner_with_spectrum(w.mat(), s);
}

PhiVec scale_to_feasible(const SymMatrix& sigma, const PhiVec& phi) {
  const PhiVec base = phi.cwiseMax(0.0);
  auto feasible = [&](double s) {
    const Eigen::VectorXd lam = sym_eigenvalues(sigma.minus_diag(s * base));
    return lam(lam.size() - 1) >= 0.0;
  };
  if (feasible(1.0)) return base;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) lo = mid; else hi = mid;
  }
  return lo * base;
}

CgResult solve_cg_concave(const ProblemSpec& spec, const CgConfig& cfg, const CgInit& init) {
  if (spec.q != 1.0 && spec.q != 2.0)
    throw InputError("the concave-marginal algorithm supports q in {1, 2}; use alg1");
  const auto t0 = Clock::now();
  const int r = spec.rank;
  const SymMatrix& sigma = spec.sigma;

  PhiVec phi_prev = init.phi ? scale_to_feasible(sigma, *init.phi) : default_start(spec);
  PoweredSpectrum spec_prev = powered_spectrum(sigma, phi_prev, spec.q);
  Eigen::MatrixXd w = init.w ? init.w->mat() : trailing_projector(spec_prev.vectors, r);
  // g(W^k, phi_{k-1}); for the W built from phi_{k-1} this is the Fan value of M_{k-1}.
  double g_prev_phi = inner_with_spectrum(w, spec_prev);

  const AdmmConfig acfg = inner_config(spec, cfg);
  AdmmState warm = seed_state(sigma, phi_prev);

  CgResult out;
  out.algorithm = CgAlgorithm::Concave;
  double g_last = std::numeric_limits<double>::infinity();
  PhiVec phi = phi_prev;
  Eigen::MatrixXd w_at_phi = w;

  for (int k = 1; k <= cfg.max_iter; ++k) {
    const SymMatrix wk(w);
    const QuadDiagObjective obj = concave_cg_objective(sigma, wk, spec.q);
    AdmmResult ar = run_inner(sigma, obj, acfg, &warm, k);
    out.admm_iterations += ar.iterations;
    warm = std::move(ar.state);

    PhiVec candidate = repair_phi_shift(sigma, ar.phi);
    PoweredSpectrum s_cand = powered_spectrum(sigma, candidate, spec.q);
    double g_cand = inner_with_spectrum(w, s_cand);
    // Keep the previous phi when the inexact inner solve did not improve on it.
    if (!(g_cand <= g_prev_phi)) {
      candidate = phi_prev;
      s_cand = spec_prev;
      g_cand = g_prev_phi;
    }
    phi = candidate;
    w_at_phi = w;
    const double fan = trailing_sum(s_cand.values, r);
    const double delta = fan - g_cand;

    out.trace.push_back(
        {k, g_cand, std::min(delta, 0.0), 1.0, ms_since(t0), ar.iterations, ar.converged});
    out.iterations = k;

    const bool tiny = g_cand <= 1e-12;
    const bool small_decrease = k > 1 && g_last - g_cand <= spec.cg_tol * g_last;
    g_last = g_cand;
    if (tiny || small_decrease) {
      out.status = CgStatus::Converged;
      break;
    }

    w = r == 0 ? Eigen::MatrixXd::Identity(sigma.dim(), sigma.dim())
               : trailing_projector(s_cand.vectors, r);
    phi_prev = phi;
    spec_prev = std::move(s_cand);
    g_prev_phi = inner_with_spectrum(w, spec_prev);
  }

  out.solution = make_solution(spec, phi, SymMatrix(w_at_phi));
  return out;
}

CgResult solve_cg_smooth(const ProblemSpec& spec, const CgConfig& cfg, const CgInit& init) {
  const auto t0 = Clock::now();
  const int r = spec.rank;
  const SymMatrix& sigma = spec.sigma;

  PhiVec phi = init.phi ? scale_to_feasible(sigma, *init.phi) : default_start(spec);
  PoweredSpectrum s = powered_spectrum(sigma, phi, spec.q);
  Eigen::MatrixXd w = init.w ? init.w->mat() : trailing_projector(s.vectors, r);
  double g = inner_with_spectrum(w, s);

  AdmmConfig acfg = inner_config(spec, cfg);
  AdmmState warm = seed_state(sigma, phi);

  CgResult out;
  out.algorithm = CgAlgorithm::Smooth;
  out.status = CgStatus::IterationCap;

  for (int k = 1; k <= cfg.max_iter; ++k) {
    const Eigen::MatrixXd w_bar =
        r == 0 ? Eigen::MatrixXd::Identity(sigma.dim(), sigma.dim()) : trailing_projector(s.vectors, r);
    const Eigen::VectorXd grad_phi = phi_gradient(sigma, w, phi, spec.q);
    // The linear minimizer is scale invariant; normalizing keeps ADMM conditioned as g -> 0.
    const double gscale = grad_phi.cwiseAbs().maxCoeff();
    QuadDiagObjective lin{Eigen::VectorXd::Zero(sigma.dim()),
                          gscale > 0.0 ? Eigen::VectorXd(grad_phi / gscale) : grad_phi};
    AdmmResult ar = run_inner(sigma, lin, acfg, &warm, k);
    out.admm_iterations += ar.iterations;
    warm = std::move(ar.state);
    const PhiVec phi_bar = repair_phi_shift(sigma, ar.phi);

    // Directional derivative along (W_bar - W, phi_bar - phi).
    const double dw = inner_with_spectrum(w_bar, s) - inner_with_spectrum(w, s);
    const double dphi = grad_phi.dot(phi_bar - phi);
    const double slope = dw + dphi;
    out.iterations = k;
    if (slope >= -1e-14 * std::max(1.0, std::abs(g))) {
      out.trace.push_back({k, g, slope, 0.0, ms_since(t0), ar.iterations, ar.converged});
      out.status = CgStatus::Stationary;
      break;
    }

    double eta = 1.0;
    bool accepted = false;
    Eigen::MatrixXd w_try;
    PhiVec phi_try;
    PoweredSpectrum s_try;
    double g_try = g;
    while (eta >= cfg.eta_min) {
      w_try = w + eta * (w_bar - w);
      phi_try = phi + eta * (phi_bar - phi);
      s_try = powered_spectrum(sigma, phi_try, spec.q);
      g_try = inner_with_spectrum(w_try, s_try);
      if (g_try <= g + cfg.armijo_c * eta * slope) {
        accepted = true;
        break;
      }
      eta *= cfg.backtrack;
    }
    if (!accepted) {
      out.trace.push_back({k, g, slope, 0.0, ms_since(t0), ar.iterations, ar.converged});
      out.status = CgStatus::Stationary;
      break;
    }

    const double g_old = g;
    w = std::move(w_try);
    phi = std::move(phi_try);
    s = std::move(s_try);
    g = g_try;
    out.trace.push_back({k, g, slope, eta, ms_since(t0), ar.iterations, ar.converged});
    if (g <= 1e-12 || g_old - g <= spec.cg_tol * g_old) {
      out.status = CgStatus::Converged;
      break;
    }
  }

  out.solution = make_solution(spec, phi, SymMatrix(w));
  return out;
}

CgResult solve_cg(const ProblemSpec& spec, const CgConfig& cfg, const CgInit& init) {
  const CgAlgorithm alg = cfg.algorithm.value_or(
      (spec.q == 1.0 || spec.q == 2.0) ? CgAlgorithm::Concave : CgAlgorithm::Smooth);
  auto run = [&](const CgInit& start) {
    return alg == CgAlgorithm::Concave ? solve_cg_concave(spec, cfg, start)
                                       : solve_cg_smooth(spec, cfg, start);
  };
  CgResult best = run(init);
  if (cfg.restarts > 1) {
    Rng rng(cfg.seed);
    const Eigen::VectorXd u = compute_u(spec.sigma);
    for (int k = 1; k < cfg.restarts; ++k) {
      PhiVec start(u.size());
      for (Eigen::Index i = 0; i < u.size(); ++i) start(i) = rng.uniform() * u(i);
      CgResult cand = run(CgInit{start, std::nullopt});
      if (cand.solution.objective < best.solution.objective) best = std::move(cand);
    }
  }
  return best;
}

}  // namespace cfa
