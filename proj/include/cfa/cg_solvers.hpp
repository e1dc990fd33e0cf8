#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cfa/linalg.hpp"
#include "cfa/model.hpp"
#include "cfa/phi_admm.hpp"

namespace cfa {

enum class CgAlgorithm {
  Smooth,   // conditional gradient on the joint (W, Phi) objective, Armijo step
  Concave,  // conditional gradient on the concave marginal G_q(W), unit step
};

enum class CgStatus { Converged, Stationary, IterationCap };

struct CgConfig {
  std::optional<CgAlgorithm> algorithm;  // default: Concave for q in {1,2}, Smooth otherwise
  int max_iter = 500;
  int restarts = 1;
  std::uint64_t seed = 0;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  double eta_min = 1e-8;
  int admm_max_iter = 50000;
  /// Accept the capped ADMM iterate (repaired to feasibility) instead of failing. Intended for
  /// large instances where the inner tolerance is out of reach within the iteration budget.
  bool inexact_inner = false;
};

/// Optional starting point. phi is repaired onto the feasible set before use.
struct CgInit {
  std::optional<PhiVec> phi;
  std::optional<SymMatrix> w;
};

struct CgTraceEntry {
  int iteration = 0;
  double value = 0.0;  // G_q(W^k) for Concave, g_q(W^k, Phi^k) for Smooth
  double delta = 0.0;  // stationarity gap (Concave) or directional derivative (Smooth)
  double eta = 1.0;
  double wall_ms = 0.0;
  int admm_iterations = 0;
  bool inner_converged = true;
};

struct CgResult {
  Solution solution;
  std::vector<CgTraceEntry> trace;
  CgStatus status = CgStatus::IterationCap;
  CgAlgorithm algorithm = CgAlgorithm::Concave;
  int iterations = 0;
  int admm_iterations = 0;
};

/// sum_{i>r} u_i u_i' over the trailing eigenvectors of M; minimizes <W, M> over
/// {0 <= W <= I, Tr(W) = p - r}.
SymMatrix update_w(const SymMatrix& m, int r);

/// Delta(W) = sum_{i>r} lambda_i(M) - <W, M>, M = (Sigma - diag(phi))^q. Always <= 0.
double stationarity_gap(const ProblemSpec& spec, const SymMatrix& w, const PhiVec& phi);

/// g_q(W, phi) = Tr(W (Sigma - diag(phi))^q).
double joint_objective(const ProblemSpec& spec, const SymMatrix& w, const PhiVec& phi);

CgResult solve_cg_concave(const ProblemSpec& spec, const CgConfig& cfg = {},
                          const CgInit& init = {});
CgResult solve_cg_smooth(const ProblemSpec& spec, const CgConfig& cfg = {},
                         const CgInit& init = {});

/// Dispatches on cfg.algorithm and runs cfg.restarts starts (the first one deterministic);
/// returns the best.
CgResult solve_cg(const ProblemSpec& spec, const CgConfig& cfg = {}, const CgInit& init = {});

/// Scales phi toward zero (bisection on the factor) until Sigma - diag(phi) is PSD.
PhiVec scale_to_feasible(const SymMatrix& sigma, const PhiVec& phi);

const char* to_string(CgAlgorithm a);
const char* to_string(CgStatus s);

}  // namespace cfa
