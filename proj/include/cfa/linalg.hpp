#pragma once

#include <Eigen/Core>

namespace cfa {

/// Relative tolerance used for every numerical PSD decision in the library.
inline constexpr double kPsdTol = 1e-8;

/// Dense symmetric matrix. Construction symmetrizes, so entries(i,j) == entries(j,i)
/// holds exactly for every stored value.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Eigen::MatrixXd& a);
  explicit SymMatrix(Eigen::MatrixXd&& a);

  static SymMatrix identity(Eigen::Index p);
  static SymMatrix zero(Eigen::Index p);
  static SymMatrix diagonal(const Eigen::VectorXd& d);

  Eigen::Index dim() const { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  const Eigen::MatrixXd& mat() const { return m_; }

  /// this - diag(d)
  SymMatrix minus_diag(const Eigen::VectorXd& d) const;

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b);
  friend SymMatrix operator*(double s, const SymMatrix& a);

 private:
  Eigen::MatrixXd m_;
};

/// Full spectral decomposition, eigenvalues sorted in decreasing order.
struct EigenPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns are orthonormal eigenvectors
};

EigenPairs sym_eigen(const SymMatrix& a);

/// Eigenvalues only, decreasing order. Cheaper than sym_eigen.
Eigen::VectorXd sym_eigenvalues(const SymMatrix& a);

/// Same kernels on a raw Eigen matrix that the caller guarantees is symmetric
/// (only the lower triangle is read).
EigenPairs sym_eigen(const Eigen::MatrixXd& a);
Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& a);

/// (sum_i |lambda_i(A)|^q)^(1/q)
double schatten_q(const SymMatrix& a, double q);

/// Euclidean projection onto the PSD cone.
SymMatrix psd_project(const SymMatrix& a);

/// U diag(lambda_i^q) U' for PSD A; eigenvalues slightly below zero are clamped.
SymMatrix psd_power(const SymMatrix& a, double q);

/// Best rank-r approximation (top-r eigenpairs, negative eigenvalues dropped).
SymMatrix best_rank_r(const SymMatrix& a, int r);

/// D A D with D = diag(1/sqrt(A_ii)).
SymMatrix to_correlation(const SymMatrix& a);

/// Sum of the trailing (p - r) entries of a decreasingly sorted spectrum.
double trailing_sum(const Eigen::VectorXd& values_desc, int r);

/// Projection onto {W : 0 <= W <= I, Tr(W) = k} in Frobenius norm.
SymMatrix project_spectrahedron(const SymMatrix& a, double k);

/// Projection of a vector onto {0 <= x <= 1, sum(x) = k}.
Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& v, double k);

bool all_finite(const Eigen::MatrixXd& a);

}  // namespace cfa
