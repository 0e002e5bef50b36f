#include "deepo/policy.hpp"

#include <cmath>
#include <sstream>

namespace deepo {

namespace {

void require_policy_dims(const Matrix& g, const DataMatrices& data) {
  if (g.rows() != data.length() || g.cols() != data.state_dim()) {
    std::ostringstream os;
    os << "policy must be " << data.length() << "x" << data.state_dim() << ", got "
       << g.rows() << "x" << g.cols();
    throw DimensionError(os.str());
  }
}

// P, Sigma, cost for the closed loop X_+ G; the linear constraint is not
// consulted here.
ClosedLoopEval closed_loop_eval(const Matrix& g, const DataMatrices& data,
                                const GeneralizedCost& cost, double margin) {
  const Eigen::Index n = data.state_dim();
  Matrix a_cl = data.x_plus() * g;
  const SymMatrix w(cost.q().mat() + g.transpose() * cost.r_eff().mat() * g);
  SymMatrix p = linalg::solve_discrete_lyapunov_obs(a_cl, w, margin);
  SymMatrix sigma = linalg::solve_discrete_lyapunov_ctrl(a_cl, SymMatrix::identity(n), margin);
  const double j = p.trace();

  // Internal consistency: the two trace forms of the cost agree, and the
  // bounds Tr{Sigma} <= J / sigma_min(Q), ||P|| <= J hold for every evaluation.
  const double alt = (w.mat() * sigma.mat()).trace();
  if (std::abs(j - alt) > 1e-8 * (1.0 + std::abs(j)))
    throw SolveError("cost trace identities disagree beyond tolerance");
  const double slack = 1e-9 * (1.0 + std::abs(j));
  if (sigma.trace() > j / cost.sigma_min_q() + slack || p.max_eigenvalue() > j + slack)
    throw SolveError("closed-loop bound certificates violated");

  Matrix e = (cost.r_eff().mat() * g + data.x_plus().transpose() * (p.mat() * a_cl));
  return ClosedLoopEval{std::move(p), std::move(sigma), std::move(e), j, std::move(a_cl)};
}

}  // namespace

Feasibility check_policy(const Matrix& g, const DataMatrices& data) {
  require_policy_dims(g, data);
  const Eigen::Index n = data.state_dim();
  const double residual = (data.x_minus() * g - Matrix::Identity(n, n)).norm();
  const double rho = linalg::spectral_radius(data.x_plus() * g);
  return Feasibility{residual, rho};
}

void require_feasible(const Matrix& g, const DataMatrices& data, double stability_margin) {
  const Feasibility f = check_policy(g, data);
  if (f.constraint_residual > kFeasibilityTol) {
    std::ostringstream os;
    os << "policy violates X_- G = I: residual " << f.constraint_residual;
    throw InfeasibleError(os.str(), f.constraint_residual);
  }
  if (f.spectral_radius >= 1.0 - stability_margin) {
    std::ostringstream os;
    os << "policy closed loop unstable: rho = " << f.spectral_radius;
    throw UnstableError(os.str(), f.spectral_radius);
  }
}

ClosedLoopEval evaluate(const Matrix& g, const DataMatrices& data, const GeneralizedCost& cost,
                        double stability_margin) {
  require_feasible(g, data, stability_margin);
  return closed_loop_eval(g, data, cost, stability_margin);
}

ClosedLoopEval evaluate(const Matrix& g, const DataMatrices& data, const SymMatrix& q,
                        const SymMatrix& r, double stability_margin) {
  return evaluate(g, data, GeneralizedCost(data, q, r), stability_margin);
}

double unconstrained_cost(const Matrix& g, const DataMatrices& data,
                          const GeneralizedCost& cost, double stability_margin) {
  require_policy_dims(g, data);
  return closed_loop_eval(g, data, cost, stability_margin).cost;
}

Matrix gradient(const Matrix& g, const DataMatrices& data, const GeneralizedCost& cost,
                double stability_margin) {
  const ClosedLoopEval eval = evaluate(g, data, cost, stability_margin);
  return 2.0 * eval.gradient_factor * eval.state_covariance.mat();
}

Matrix gradient(const Matrix& g, const DataMatrices& data, const SymMatrix& q,
                const SymMatrix& r, double stability_margin) {
  return gradient(g, data, GeneralizedCost(data, q, r), stability_margin);
}

Matrix projected_gradient_step(const Matrix& g, double eta, const DataMatrices& data,
                               const GeneralizedCost& cost, double stability_margin) {
  if (eta < 0.0) throw ConfigError("stepsize must be nonnegative");
  const Matrix grad = gradient(g, data, cost, stability_margin);
  const Matrix next = g - eta * (data.pi_x_minus().mat() * grad);
  const double rho = linalg::spectral_radius(data.x_plus() * next);
  if (rho >= 1.0 - stability_margin) {
    std::ostringstream os;
    os << "gradient step left the stability region: rho = " << rho;
    throw StepUnstableError(os.str(), rho, 0);
  }
  return next;
}

double hessian_quadratic_form(const Matrix& g, const Matrix& z, const DataMatrices& data,
                              const GeneralizedCost& cost, double stability_margin) {
  require_policy_dims(z, data);
  const ClosedLoopEval eval = evaluate(g, data, cost, stability_margin);
  const Matrix& e = eval.gradient_factor;
  const SymMatrix rhs(z.transpose() * e + e.transpose() * z);
  const SymMatrix p_dir =
      linalg::solve_discrete_lyapunov_obs(eval.closed_loop, rhs, stability_margin);

  const Matrix weighted_z = cost.r_eff().mat() * z +
                            data.x_plus().transpose() * (eval.value_matrix.mat() *
                                                         (data.x_plus() * z));
  const double first =
      2.0 * (z.transpose() * weighted_z * eval.state_covariance.mat()).trace();
  const double second = 4.0 * (z.transpose() * data.x_plus().transpose() * p_dir.mat() *
                               eval.closed_loop * eval.state_covariance.mat())
                                  .trace();
  return first + second;
}

double hessian_quadratic_form(const Matrix& g, const Matrix& z, const DataMatrices& data,
                              const SymMatrix& q, const SymMatrix& r,
                              double stability_margin) {
  return hessian_quadratic_form(g, z, data, GeneralizedCost(data, q, r), stability_margin);
}

double smoothness_bound(double a, const DataMatrices& data, const SymMatrix& q,
                        const SymMatrix& r) {
  if (a <= 0.0) throw ConfigError("sublevel value must be positive");
  const double s = GeneralizedCost(data, q, r).sigma_min_q();
  const double u_norm_sq = std::pow(data.u_minus().operatorNorm(), 2);
  const double r_norm = r.mat().operatorNorm();
  const double xp_norm_sq = std::pow(data.x_plus().operatorNorm(), 2);
  const double xp_fro_sq = data.x_plus().squaredNorm();
  const double xi = (u_norm_sq * r_norm + xp_norm_sq * a + a) / s - 1.0;
  return 2.0 * u_norm_sq * r_norm * a / s + (xi + 2.0) * xp_fro_sq * a * a / s;
}

Matrix policy_from_gain(const Matrix& k0, const DataMatrices& data, double stability_margin) {
  const Eigen::Index n = data.state_dim();
  const Eigen::Index m = data.input_dim();
  if (k0.rows() != m || k0.cols() != n) throw DimensionError("gain must be m-by-n");
  Matrix stacked(m + n, n);
  stacked.topRows(m) = k0;
  stacked.bottomRows(n) = Matrix::Identity(n, n);
  Matrix g = data.d_pseudoinverse() * stacked;
  const double rho = linalg::spectral_radius(data.x_plus() * g);
  if (rho >= 1.0 - stability_margin) {
    std::ostringstream os;
    os << "gain is not stabilizing on this data: rho(X_+ G) = " << rho;
    throw UnstableError(os.str(), rho);
  }
  return g;
}

Matrix recover_gain(const Matrix& g, const DataMatrices& data) {
  require_policy_dims(g, data);
  return data.u_minus() * g;
}

}  // namespace deepo
