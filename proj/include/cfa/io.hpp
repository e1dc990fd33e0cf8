#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfa/bench.hpp"
#include "cfa/branch_bound.hpp"
#include "cfa/cg_solvers.hpp"
#include "cfa/linalg.hpp"

namespace cfa {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Level from the CFA_LOG environment variable (error|warn|info|debug), default warn.
LogLevel log_level();
void log(LogLevel level, const std::string& msg);

/// Relative asymmetry above which a matrix file is rejected rather than averaged.
inline constexpr double kMaxAsymmetry = 1e-4;

/// Headerless CSV, p lines of p comma-separated numbers. Asymmetric input is averaged with
/// its transpose (warning above 1e-8); asymmetry above kMaxAsymmetry * max|a_ij| is an
/// InputError, as is any malformed content.
SymMatrix read_matrix_csv(const std::string& path, double* max_asymmetry = nullptr);
SymMatrix parse_matrix_csv(std::istream& in, double* max_asymmetry = nullptr);

/// Writes with %.17g so values round-trip exactly.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);

std::string format_double(double v);

nlohmann::json vector_json(const Eigen::VectorXd& v);
nlohmann::json matrix_json(const Eigen::MatrixXd& m);
Eigen::VectorXd json_vector(const nlohmann::json& j);
Eigen::MatrixXd json_matrix(const nlohmann::json& j);

nlohmann::json solve_report_json(const ProblemSpec& spec, const CgResult& res, double wall_ms);
nlohmann::json trace_entry_json(const CgTraceEntry& e);
nlohmann::json bb_report_json(const ProblemSpec& spec, const BbReport& rep);
nlohmann::json progress_json(const BbProgress& ev);
nlohmann::json truth_json(const GroundTruth& g);
nlohmann::json metrics_json(const MetricRow& m);

/// Reads a ground-truth sidecar written by truth_json (needs "phi" and "theta").
struct TruthFile {
  PhiVec phi;
  SymMatrix theta;
};
TruthFile read_truth_json(const std::string& path);

void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace cfa
