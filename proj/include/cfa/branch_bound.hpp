#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <limits>
#include <string>
#include <vector>

#include "cfa/model.hpp"
#include "cfa/node_sdo.hpp"
#include "cfa/rng.hpp"
#include "cfa/weyl_bounds.hpp"

namespace cfa {

struct BbNode {
  BoxBounds box;
  double z_c = -std::numeric_limits<double>::infinity();  // parent relaxation value
  double w_c = -std::numeric_limits<double>::infinity();  // Weyl bound at creation
  int depth = 0;
  std::shared_ptr<const NodeWarmState> warm;

  double bound() const { return std::max(z_c, w_c); }
};

struct BbConfig {
  double tol = 0.1;
  double epsilon = 0.4;
  double beta = 0.9;
  long node_cap = 100000;
  double time_cap = 3600.0;  // seconds
  std::uint64_t seed = 0;
  bool root_tighten = true;
  int tighten_grid = 20;
  NodeConfig node;
};

enum class Termination { GapClosed, NodeCap, TimeCap };

struct BbReport {
  Solution incumbent;
  double z_f = 0.0;
  double z_lb = 0.0;
  double gap = 0.0;
  double root_weyl = 0.0;
  double root_relaxation = -std::numeric_limits<double>::infinity();
  double initial_upper = 0.0;
  long nodes_processed = 0;
  long nodes_pruned_weyl = 0;
  long incumbent_updates = 0;
  double wall_time = 0.0;  // seconds
  Termination termination = Termination::GapClosed;
  std::uint64_t seed = 0;
};

/// One processed node, emitted through the progress callback.
struct BbProgress {
  long node = 0;
  int depth = 0;
  double z_f = 0.0;
  double z_lb = 0.0;
  double node_bound = 0.0;
  double weyl_bound = 0.0;
  double volume = 0.0;
  std::string action;  // "pruned_weyl" | "pruned_parent" | "fathomed" | "branched"
  int node_iterations = 0;
};

using BbProgressFn = std::function<void(const BbProgress&)>;

/// Global certification of the q = 1 problem. Initial incumbent from the CG solver unless
/// `initial` is given.
BbReport certify(const ProblemSpec& spec, const BbConfig& cfg = {},
                 const BbProgressFn& progress = {}, const Solution* initial = nullptr);

/// Branch index argmax_i |z_i - W_ii phi_i| and split point (1-eps) phi_i + eps l_i.
struct BranchChoice {
  Eigen::Index index = 0;
  double split = 0.0;
};

BranchChoice choose_branch(const BoxBounds& box, const PhiVec& phi, const Eigen::VectorXd& w_diag,
                           const Eigen::VectorXd& z, double epsilon);

/// Splits node at the chosen coordinate. Children inherit z_c = relaxation_value and receive
/// fresh Weyl bounds.
std::pair<BbNode, BbNode> branch_node(const BbNode& node, const BranchChoice& choice,
                                      double relaxation_value, const SymMatrix& sigma, int r);

/// Removes and returns the selected node (randomized rule with parameter beta).
BbNode select_node(std::vector<BbNode>& open, double beta, Rng& rng);

const char* to_string(Termination t);

}  // namespace cfa
