#include "deepo/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>
#include <utility>

namespace deepo::linalg {

namespace {

void require_square(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << name << " must be square, got " << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
}

void require_same_dim(const Matrix& a, const SymMatrix& w) {
  if (w.dim() != a.rows()) {
    std::ostringstream os;
    os << "Lyapunov right-hand side is " << w.dim() << "x" << w.dim()
       << " but the closed loop is " << a.rows() << "x" << a.rows();
    throw DimensionError(os.str());
  }
}

void check_stable(const Matrix& a_cl, double margin) {
  const double rho = spectral_radius(a_cl);
  if (rho >= 1.0 - margin) {
    std::ostringstream os;
    os << "closed loop not stable within margin: rho = " << rho;
    throw UnstableError(os.str(), rho);
  }
}

// Solves X = W + A' X A via (I - kron(A', A')) vec(X) = vec(W).
Matrix lyapunov_kron_solve(const Matrix& a, const Matrix& w) {
  const Eigen::Index n = a.rows();
  const Matrix at = a.transpose();
  Matrix lhs = Matrix::Identity(n * n, n * n);
  // vec(A' X A) = kron(A', A') vec(X)  (column-major vec).
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      lhs.block(i * n, j * n, n, n) -= at(i, j) * at;
  Eigen::PartialPivLU<Matrix> lu(lhs);
  const Vector x = lu.solve(Eigen::Map<const Vector>(w.data(), n * n));
  Matrix p = Eigen::Map<const Matrix>(x.data(), n, n);
  p = ((p + p.transpose()) / 2.0).eval();

  const double residual = (p - w - a.transpose() * p * a).norm();
  if (!p.allFinite() || residual > 1e-10 * (1.0 + p.norm())) {
    std::ostringstream os;
    os << "Lyapunov solve residual " << residual << " exceeds tolerance";
    throw SolveError(os.str());
  }
  return p;
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) {
  require_square(m, "SymMatrix");
  m_ = (m + m.transpose()) / 2.0;
}

SymMatrix SymMatrix::identity(Eigen::Index n) { return SymMatrix(Matrix::Identity(n, n)); }

double SymMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolveError("symmetric eigendecomposition failed");
  return es.eigenvalues().minCoeff();
}

double SymMatrix::max_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolveError("symmetric eigendecomposition failed");
  return es.eigenvalues().maxCoeff();
}

Projector::Projector(const Matrix& m, std::string source) : m_(m), source_(std::move(source)) {
  require_square(m, "Projector");
  const double sym_residual = (m_ - m_.transpose()).norm();
  const double idem_residual = (m_ * m_ - m_).norm();
  if (sym_residual > 1e-10 || idem_residual > 1e-10) {
    std::ostringstream os;
    os << "not a projector (" << source_ << "): symmetry residual " << sym_residual
       << ", idempotency residual " << idem_residual;
    throw SolveError(os.str());
  }
}

double spectral_radius(const Matrix& m) {
  require_square(m, "spectral_radius argument");
  if (m.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw SolveError("eigenvalue iteration failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

SymMatrix solve_discrete_lyapunov_obs(const Matrix& a_cl, const SymMatrix& w,
                                      double stability_margin) {
  require_square(a_cl, "closed-loop matrix");
  require_same_dim(a_cl, w);
  check_stable(a_cl, stability_margin);
  return SymMatrix(lyapunov_kron_solve(a_cl, w.mat()));
}

SymMatrix solve_discrete_lyapunov_ctrl(const Matrix& a_cl, const SymMatrix& w,
                                       double stability_margin) {
  require_square(a_cl, "closed-loop matrix");
  require_same_dim(a_cl, w);
  check_stable(a_cl, stability_margin);
  // S = W + A S A'  <=>  S = W + (A')' S (A').
  return SymMatrix(lyapunov_kron_solve(a_cl.transpose(), w.mat()));
}

DareSolution solve_dare(const Matrix& a, const Matrix& b, const SymMatrix& q,
                        const SymMatrix& r, double tol, long max_iter) {
  require_square(a, "A");
  if (b.rows() != a.rows()) throw DimensionError("B row count must match A");
  if (q.dim() != a.rows()) throw DimensionError("Q must be n-by-n");
  if (r.dim() != b.cols()) throw DimensionError("R must be m-by-m");

  Matrix p = q.mat();
  double increment = 0.0;
  for (long k = 0; k < max_iter; ++k) {
    const Matrix btp = b.transpose() * p;
    const Matrix gain_lhs = r.mat() + btp * b;
    Eigen::LDLT<Matrix> ldlt(gain_lhs);
    if (ldlt.info() != Eigen::Success)
      throw SolveError("R + B'PB factorization failed in Riccati iteration");
    const Matrix btpa = btp * a;
    Matrix next = a.transpose() * p * a + q.mat() - btpa.transpose() * ldlt.solve(btpa);
    next = ((next + next.transpose()) / 2.0).eval();
    increment = (next - p).norm();
    p = next;
    if (increment <= tol * (1.0 + p.norm())) {
      const Matrix k_star = -ldlt.solve(b.transpose() * p * a);
      return DareSolution{SymMatrix(p), k_star, k + 1, increment};
    }
  }
  std::ostringstream os;
  os << "Riccati fixed-point iteration did not converge in " << max_iter
     << " iterations (increment " << increment << ")";
  throw NoConvergenceError(os.str(), max_iter, increment);
}

Matrix right_pseudoinverse(const Matrix& m, double rank_tol_scale) {
  if (m.rows() > m.cols()) throw DimensionError("right inverse needs p <= q");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double sigma_max = svd.singularValues()(0);
  const double sigma_min = svd.singularValues()(m.rows() - 1);
  if (sigma_min <= rank_tol_scale * std::max(1.0, sigma_max)) {
    std::ostringstream os;
    os << "matrix is not full row rank: sigma_min = " << sigma_min;
    throw RankDeficientError(os.str(), sigma_min);
  }
  return svd.matrixV() * svd.singularValues().cwiseInverse().asDiagonal() *
         svd.matrixU().transpose();
}

Projector nullspace_projector(const Matrix& m, std::string source, double rank_tol_scale) {
  const Matrix pinv = right_pseudoinverse(m, rank_tol_scale);
  Matrix pi = Matrix::Identity(m.cols(), m.cols()) - pinv * m;
  pi = ((pi + pi.transpose()) / 2.0).eval();
  if (source.empty()) source = "unnamed";
  return Projector(pi, std::move(source));
}

SymMatrix sym_sqrt(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat());
  if (es.info() != Eigen::Success) throw SolveError("symmetric eigendecomposition failed");
  const double lambda_min = es.eigenvalues().minCoeff();
  if (lambda_min < -1e-10) {
    std::ostringstream os;
    os << "matrix is not PSD: lambda_min = " << lambda_min;
    throw NotPsdError(os.str(), lambda_min);
  }
  const Vector clamped = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Matrix s = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
  const SymMatrix root(s);
  const double residual = (root.mat() * root.mat() - m.mat()).norm();
  if (residual > 1e-9 * (1.0 + m.mat().norm()))
    throw SolveError("square-root reconstruction residual exceeds tolerance");
  return root;
}

}  // namespace deepo::linalg
