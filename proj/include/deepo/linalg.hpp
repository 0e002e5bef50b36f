#pragma once

#include <Eigen/Dense>
#include <string>

#include "deepo/errors.hpp"

namespace deepo::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultStabilityMargin = 1e-9;
inline constexpr double kDefaultRankTolScale = 1e-8;

/// Square real matrix kept exactly symmetric: construction stores (M + M')/2.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m);
  static SymMatrix identity(Eigen::Index n);

  const Matrix& mat() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  double trace() const { return m_.trace(); }

  // Smallest/largest eigenvalue (symmetric eigendecomposition).
  double min_eigenvalue() const;
  double max_eigenvalue() const;

 private:
  Matrix m_;
};

/// Symmetric idempotent matrix projecting onto the nullspace of some data
/// matrix; `source` records which one.
class Projector {
 public:
  Projector(const Matrix& m, std::string source);

  const Matrix& mat() const { return m_; }
  const std::string& source() const { return source_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  Matrix m_;
  std::string source_;
};

double spectral_radius(const Matrix& m);

// Solves P = W + A_cl' P A_cl by the vectorized n^2-by-n^2 linear system.
// Exact at this scale; cost grows as n^6, intended for n up to ~50.
SymMatrix solve_discrete_lyapunov_obs(const Matrix& a_cl, const SymMatrix& w,
                                      double stability_margin = kDefaultStabilityMargin);

// Transposed convention: solves S = W + A_cl S A_cl' (covariance form).
SymMatrix solve_discrete_lyapunov_ctrl(const Matrix& a_cl, const SymMatrix& w,
                                       double stability_margin = kDefaultStabilityMargin);

struct DareSolution {
  SymMatrix p;       // stabilizing solution
  Matrix gain;       // K = -(R + B'PB)^{-1} B'PA
  long iterations;
  double residual;   // fixed-point increment at termination
};

// Fixed-point iteration P <- A'PA + Q - A'PB (R + B'PB)^{-1} B'PA from P0 = Q.
DareSolution solve_dare(const Matrix& a, const Matrix& b, const SymMatrix& q,
                        const SymMatrix& r, double tol = 1e-12, long max_iter = 100000);

// M' (M M')^{-1} for full-row-rank M (p <= q); computed via SVD.
Matrix right_pseudoinverse(const Matrix& m, double rank_tol_scale = kDefaultRankTolScale);

// I_q - M_pinv M, the orthogonal projector onto the nullspace of M.
Projector nullspace_projector(const Matrix& m, std::string source = "",
                              double rank_tol_scale = kDefaultRankTolScale);

// Symmetric PSD square root; eigenvalues in [-1e-10, 0) are clamped to zero.
SymMatrix sym_sqrt(const SymMatrix& m);

}  // namespace deepo::linalg
