#include "cfa/branch_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "cfa/cg_solvers.hpp"
#include "cfa/errors.hpp"

namespace cfa {

namespace {

constexpr double kDegenerate = 1e-12;

std::size_t argmin_by(const std::vector<BbNode>& open, double (*key)(const BbNode&)) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < open.size(); ++i)
    if (key(open[i]) < key(open[best])) best = i;
  return best;
}

double key_bound(const BbNode& n) { return n.bound(); }
double key_z(const BbNode& n) { return n.z_c; }
double key_w(const BbNode& n) { return n.w_c; }

BbNode take(std::vector<BbNode>& open, std::size_t i) {
  BbNode n = std::move(open[i]);
  open.erase(open.begin() + static_cast<std::ptrdiff_t>(i));
  return n;
}

}  // namespace

const char* to_string(Termination t) {
  switch (t) {
    case Termination::GapClosed: return "gap_closed";
    case Termination::NodeCap: return "node_cap";
    case Termination::TimeCap: return "time_cap";
  }
  return "unknown";
}

BranchChoice choose_branch(const BoxBounds& box, const PhiVec& phi, const Eigen::VectorXd& w_diag,
                           const Eigen::VectorXd& z, double epsilon) {
  BranchChoice c;
  double best = -1.0;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    if (box.upper(i) - box.lower(i) <= kDegenerate) continue;
    const double v = std::abs(z(i) - w_diag(i) * phi(i));
    if (v > best) {
      best = v;
      c.index = i;
    }
  }
  if (best < 0.0) {
    // Every interval is a point; pick the widest anyway so the caller gets a valid index.
    (box.upper - box.lower).maxCoeff(&c.index);
  }
  const Eigen::Index i = c.index;
  const double l = box.lower(i), u = box.upper(i);
  double alpha = (1.0 - epsilon) * phi(i) + epsilon * l;
  if (!(alpha > l + kDegenerate && alpha < u - kDegenerate)) alpha = 0.5 * (l + u);
  c.split = alpha;
  return c;
}

std::pair<BbNode, BbNode> branch_node(const BbNode& node, const BranchChoice& choice,
                                      double relaxation_value, const SymMatrix& sigma, int r) {
  BbNode left = node, right = node;
  left.box.upper(choice.index) = choice.split;
  right.box.lower(choice.index) = choice.split;
  left.depth = right.depth = node.depth + 1;
  left.z_c = right.z_c = relaxation_value;
  left.w_c = weyl_lower_bound(sigma, left.box.upper, r);
  right.w_c = weyl_lower_bound(sigma, right.box.upper, r);
  return {std::move(left), std::move(right)};
}

BbNode select_node(std::vector<BbNode>& open, double beta, Rng& rng) {
  if (open.empty()) throw InputError("select_node: no open nodes");
  if (open.size() == 1) return take(open, 0);
  if (rng.uniform() < beta) return take(open, argmin_by(open, key_bound));
  const std::size_t iz = argmin_by(open, key_z);
  const std::size_t iw = argmin_by(open, key_w);
  const double zmin = open[iz].z_c, wmin = open[iw].w_c;
  if (rng.uniform() < beta) return take(open, zmin <= wmin ? iz : iw);
  if (zmin < wmin) return take(open, iw);
  return take(open, iz);
}

BbReport certify(const ProblemSpec& spec, const BbConfig& cfg, const BbProgressFn& progress,
                 const Solution* initial) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  if (spec.q != 1.0) throw InputError("certification is implemented for q = 1 only");
  if (!(cfg.tol > 0.0)) throw InputError("tolerance must be positive");
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon < 1.0)) throw InputError("epsilon must be in [0, 1)");
  if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) throw InputError("beta must be in [0, 1]");

  const SymMatrix& sigma = spec.sigma;
  const int r = spec.rank;
  const Eigen::Index p = sigma.dim();

  BbReport rep;
  rep.seed = cfg.seed;
  if (initial) {
    rep.incumbent = *initial;
  } else {
    try {
      rep.incumbent = solve_cg(spec).solution;
    } catch (const ConvergenceError& e) {
      // Any feasible point is a valid starting incumbent.
      rep.incumbent = make_solution(spec, repair_phi_shift(sigma, e.best().cwiseMax(0.0)));
    }
  }
  double z_f = rep.incumbent.objective;
  rep.initial_upper = z_f;

  double floor = std::numeric_limits<double>::infinity();
  BoxBounds root_box{Eigen::VectorXd::Zero(p), compute_u(sigma)};
  if (cfg.root_tighten) {
    TightenResult tr = tighten_bounds(sigma, root_box, r, z_f, cfg.tol, cfg.tighten_grid);
    root_box = std::move(tr.box);
    floor = std::min(floor, tr.discarded_bound);
  }
  BbNode root;
  root.box = root_box;
  root.w_c = weyl_lower_bound(sigma, root_box.upper, r);
  rep.root_weyl = root.w_c;

  std::vector<BbNode> open;
  open.push_back(std::move(root));
  Rng rng(cfg.seed);
  double z_lb = -std::numeric_limits<double>::infinity();
  rep.termination = Termination::NodeCap;

  auto update_incumbent = [&](const PhiVec& phi_candidate) {
    const PhiVec phi0 = scale_to_feasible(sigma, phi_candidate);
    const double t = objective_fq(spec, phi0);
    if (!(t < z_f)) return;
    const auto [phi, val] = polish_incumbent(phi0, spec);
    if (val < z_f) {
      rep.incumbent = make_solution(spec, phi);
      z_f = rep.incumbent.objective;
      ++rep.incumbent_updates;
    }
  };

  auto emit = [&](const BbNode& n, double node_bound, const char* action, int iters) {
    if (!progress) return;
    BbProgress ev;
    ev.node = rep.nodes_processed;
    ev.depth = n.depth;
    ev.z_f = z_f;
    ev.z_lb = z_lb;
    ev.node_bound = node_bound;
    ev.weyl_bound = n.w_c;
    ev.volume = n.box.volume();
    ev.action = action;
    ev.node_iterations = iters;
    progress(ev);
  };

  while (true) {
    double open_min = std::numeric_limits<double>::infinity();
    for (const BbNode& n : open) open_min = std::min(open_min, n.bound());
    z_lb = std::max(z_lb, std::min({open_min, floor, z_f}));
    // The root is always processed so a root certificate reports one node.
    if (rep.nodes_processed > 0 && z_f - z_lb <= cfg.tol) {
      rep.termination = Termination::GapClosed;
      break;
    }
    if (open.empty()) break;
    if (rep.nodes_processed >= cfg.node_cap) {
      rep.termination = Termination::NodeCap;
      break;
    }
    if (elapsed() >= cfg.time_cap) {
      rep.termination = Termination::TimeCap;
      break;
    }

    BbNode node = select_node(open, cfg.beta, rng);
    ++rep.nodes_processed;

    if (prune_test(node.w_c, z_f, cfg.tol)) {
      ++rep.nodes_pruned_weyl;
      floor = std::min(floor, node.w_c);
      emit(node, node.bound(), "pruned_weyl", 0);
      continue;
    }
    if (z_f - cfg.tol < node.z_c) {
      floor = std::min(floor, node.z_c);
      emit(node, node.bound(), "pruned_parent", 0);
      continue;
    }

    if ((node.box.upper - node.box.lower).maxCoeff() <= kDegenerate) {
      // A single point: the Weyl bound at u is already (numerically) exact.
      if (check_feasible(sigma, node.box.lower, 0.0).feasible) update_incumbent(node.box.lower);
      floor = std::min(floor, node.bound());
      emit(node, node.bound(), "fathomed", 0);
      continue;
    }

    const NodeRelaxation rel{sigma, r, node.box};
    NodeConfig ncfg = cfg.node;
    ncfg.cutoff = z_f - cfg.tol;
    const NodeResult res = solve_node(rel, ncfg, node.warm.get());
    if (node.depth == 0) rep.root_relaxation = res.lower_bound;
    const double node_lb = std::max(res.lower_bound, node.bound());

    if (res.status != NodeStatus::Infeasible) update_incumbent(res.primal_phi);

    if (node_lb >= z_f - cfg.tol) {
      floor = std::min(floor, node_lb);
      emit(node, node_lb, "fathomed", res.iterations);
      continue;
    }

    const BranchChoice choice =
        choose_branch(node.box, res.primal_phi, res.primal_w.mat().diagonal(), res.primal_z,
                      cfg.epsilon);
    auto [left, right] = branch_node(node, choice, node_lb, sigma, r);
    auto warm = std::make_shared<const NodeWarmState>(res.warm);
    left.warm = warm;
    right.warm = warm;
    emit(node, node_lb, "branched", res.iterations);
    open.push_back(std::move(left));
    open.push_back(std::move(right));
  }

  rep.z_f = z_f;
  rep.z_lb = std::min(z_lb, z_f);
  rep.gap = rep.z_f - rep.z_lb;
  rep.wall_time = elapsed();
  return rep;
}

}  // namespace cfa
