#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cfa/linalg.hpp"
#include "cfa/model.hpp"

namespace cfa {

enum class InstanceClass { A1, A2, B1, B2, B3 };

struct InstanceSpec {
  InstanceClass cls = InstanceClass::A1;
  int p = 10;
  int R = 2;        // generative rank (unused for A2)
  int r_inner = 1;  // structured block rank for B2 / B3
  std::uint64_t seed = 0;

  /// Parses "A1(3/200)", "A2(200)", "B1(5/100)", "B2(5/10/100)", "B3(5/10/100)".
  static InstanceSpec parse(const std::string& text, std::uint64_t seed = 0);
  std::string name() const;
};

/// Ground truth in correlation units: sigma = D (theta_raw + diag(phi_raw)) D,
/// theta = D theta_raw D, phi = D^2 phi_raw.
struct GroundTruth {
  InstanceSpec spec;
  SymMatrix sigma;
  SymMatrix theta;
  PhiVec phi;
  Eigen::VectorXd scaling;  // diagonal of D
  double alpha = 1.0;       // B classes: Tr(theta_raw) / Tr(phi_draw)
  double phi_bar = 1.0;     // A classes
  double raw_phi_trace = 0.0;
  double raw_theta_trace = 0.0;
};

GroundTruth generate(const InstanceSpec& spec);

struct PcResult {
  PhiVec phi;
  SymMatrix theta;
};

/// theta = best rank-r part of Sigma, phi = max(diag(Sigma - theta), 0).
PcResult pc_baseline(const SymMatrix& sigma, int r);

struct MetricRow {
  double error_phi = 0.0;
  double error_theta = 0.0;
  double explained_variance = 0.0;
  double lambda_min = 0.0;
  /// The two errors in the original covariance units (phi / D^2, D^-1 theta D^-1); NaN when
  /// no scaling is known.
  double error_phi_raw = std::numeric_limits<double>::quiet_NaN();
  double error_theta_raw = std::numeric_limits<double>::quiet_NaN();
};

/// Error(Phi), Error(Theta) against best_rank_r(truth.theta, r) in squared Frobenius norm,
/// explained variance of the top r eigenvalues of theta_hat over Tr(Sigma - Phi_hat), and
/// lambda_min(Sigma - Phi_hat).
MetricRow metrics(const SymMatrix& sigma, const SymMatrix& theta_true, const PhiVec& phi_true,
                  const PhiVec& phi_hat, const SymMatrix& theta_hat, int r);
MetricRow metrics(const GroundTruth& truth, const PhiVec& phi_hat, const SymMatrix& theta_hat,
                  int r);

enum class Method { Cfa1, Cfa2, Mtfa, Pc };

Method parse_method(const std::string& s);
const char* to_string(Method m);
const char* to_string(InstanceClass c);

struct BenchTask {
  InstanceSpec instance;
  int rank = 1;
  Method method = Method::Cfa1;
};

struct BenchRow {
  BenchTask task;
  MetricRow metrics;
  double objective = 0.0;  // trailing-eigenvalue objective (q=1 scale) of phi_hat when feasible
  double wall_ms = 0.0;
  int iterations = 0;
  std::string error;  // non-empty when the method failed
};

BenchRow run_task(const BenchTask& task);

/// Runs the tasks on `jobs` worker threads; rows come back in task order.
std::vector<BenchRow> run_batch(const std::vector<BenchTask>& tasks, int jobs = 1);

}  // namespace cfa
