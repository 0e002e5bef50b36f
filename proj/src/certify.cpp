#include "deepo/certify.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <sstream>

namespace deepo::certify {

ConvexFeasibility check_convex(const ConvexPoint& point, const DataMatrices& data) {
  const Eigen::Index n = data.state_dim();
  if (point.l.rows() != data.length() || point.l.cols() != n)
    throw DimensionError("L must be T-by-n");
  if (point.sigma.dim() != n) throw DimensionError("Sigma must be n-by-n");

  const double linear = (point.sigma.mat() - data.x_minus() * point.l).norm();
  Matrix block(2 * n, 2 * n);
  block.topLeftCorner(n, n) = point.sigma.mat() - Matrix::Identity(n, n);
  block.topRightCorner(n, n) = data.x_plus() * point.l;
  block.bottomLeftCorner(n, n) = block.topRightCorner(n, n).transpose();
  block.bottomRightCorner(n, n) = point.sigma.mat();
  Eigen::SelfAdjointEigenSolver<Matrix> es(block, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolveError("LMI eigendecomposition failed");
  return ConvexFeasibility{linear, es.eigenvalues().minCoeff()};
}

ConvexPoint from_policy(const Matrix& g, const DataMatrices& data, double stability_margin) {
  require_feasible(g, data, stability_margin);
  const Matrix a_cl = data.x_plus() * g;
  const SymMatrix sigma = linalg::solve_discrete_lyapunov_ctrl(
      a_cl, SymMatrix::identity(data.state_dim()), stability_margin);
  return ConvexPoint{g * sigma.mat(), sigma};
}

Matrix to_policy(const ConvexPoint& point) {
  const double lambda_min = point.sigma.min_eigenvalue();
  if (lambda_min <= 1e-10) {
    std::ostringstream os;
    os << "Sigma numerically singular: lambda_min = " << lambda_min;
    throw SingularSigmaError(os.str(), lambda_min);
  }
  Eigen::LDLT<Matrix> ldlt(point.sigma.mat());
  if (ldlt.info() != Eigen::Success) throw SolveError("Sigma factorization failed");
  // G = L Sigma^{-1}  <=>  Sigma G' = L'.
  return ldlt.solve(point.l.transpose()).transpose();
}

double evaluate_f(const ConvexPoint& point, const DataMatrices& data, const SymMatrix& q,
                  const SymMatrix& r) {
  if (q.dim() != point.sigma.dim()) throw DimensionError("Q must match Sigma");
  const double lambda_min = point.sigma.min_eigenvalue();
  if (lambda_min <= 1e-10)
    throw SingularSigmaError("Sigma numerically singular in f", lambda_min);
  Eigen::LDLT<Matrix> ldlt(point.sigma.mat());
  if (ldlt.info() != Eigen::Success) throw SolveError("Sigma factorization failed");
  // Tr{L Sigma^{-1} L' U_-' R U_-} = Tr{(U_- L) Sigma^{-1} (U_- L)' R}.
  const Matrix u_l = data.u_minus() * point.l;
  return (q.mat() * point.sigma.mat()).trace() +
         (u_l * ldlt.solve(u_l.transpose()) * r.mat()).trace();
}

double convex_hessian_action(const ConvexPoint& point, const Matrix& l_dir,
                             const SymMatrix& sigma_dir, const DataMatrices& data,
                             const SymMatrix& r) {
  const double lambda_min = point.sigma.min_eigenvalue();
  if (lambda_min <= 1e-10)
    throw SingularSigmaError("Sigma numerically singular in Hessian", lambda_min);
  Eigen::LDLT<Matrix> ldlt(point.sigma.mat());
  if (ldlt.info() != Eigen::Success) throw SolveError("Sigma factorization failed");
  // W = U_- L_dir - U_- L Sigma^{-1} Sigma_dir; value = 2 Tr{W' R W Sigma^{-1}}.
  const Matrix w =
      data.u_minus() * l_dir - data.u_minus() * point.l * ldlt.solve(sigma_dir.mat());
  return 2.0 * (w.transpose() * r.mat() * w * ldlt.solve(
                    Matrix::Identity(point.sigma.dim(), point.sigma.dim())))
                   .trace();
}

FeasibleDirection random_feasible_direction(const DataMatrices& data, std::mt19937_64& rng) {
  const Eigen::Index n = data.state_dim();
  const SymMatrix sigma_dir(data::gaussian(n, n, rng));
  const Matrix x_pinv = linalg::right_pseudoinverse(data.x_minus());
  Matrix l_dir = x_pinv * sigma_dir.mat() +
                 data.pi_x_minus().mat() * data::gaussian(data.length(), n, rng);
  const double scale =
      std::sqrt(l_dir.squaredNorm() + sigma_dir.mat().squaredNorm());
  return FeasibleDirection{l_dir / scale, SymMatrix(sigma_dir.mat() / scale)};
}

Matrix random_nullspace_direction(const DataMatrices& data, std::mt19937_64& rng) {
  Matrix z = data.pi_x_minus().mat() *
             data::gaussian(data.length(), data.state_dim(), rng);
  const double norm = z.norm();
  if (norm < 1e-14) throw GenerationError("degenerate nullspace direction draw");
  return z / norm;
}

std::vector<Matrix> sample_sublevel_policies(const DataMatrices& data, const SymMatrix& q,
                                             const SymMatrix& r,
                                             const std::vector<Matrix>& anchors, int count,
                                             double max_cost, std::mt19937_64& rng,
                                             double perturbation_scale) {
  if (anchors.empty()) throw ConfigError("sublevel sampling needs at least one anchor");
  if (count < 1) throw ConfigError("sample count must be positive");
  const GeneralizedCost cost(data, q, r);

  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(count));
  std::uniform_int_distribution<std::size_t> pick(0, anchors.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const long budget = 200L * count;
  for (long attempt = 0; attempt < budget && out.size() < static_cast<std::size_t>(count);
       ++attempt) {
    // Alternate: convex combination of two anchors, then a nullspace kick.
    Matrix candidate = anchors[pick(rng)];
    if (anchors.size() > 1 && attempt % 2 == 0) {
      const double theta = unit(rng);
      candidate = theta * candidate + (1.0 - theta) * anchors[pick(rng)];
    }
    candidate += perturbation_scale * data.pi_x_minus().mat() *
                 data::gaussian(data.length(), data.state_dim(), rng);
    const Feasibility feas = check_policy(candidate, data);
    if (!feas.feasible()) continue;
    if (unconstrained_cost(candidate, data, cost) > max_cost) continue;
    out.push_back(std::move(candidate));
  }
  if (out.size() < static_cast<std::size_t>(count)) {
    std::ostringstream os;
    os << "sublevel sampling produced " << out.size() << "/" << count
       << " policies within budget";
    throw GenerationError(os.str());
  }
  return out;
}

StrongConvexityEstimate estimate_strong_convexity(const std::vector<ConvexPoint>& points,
                                                  const std::vector<FeasibleDirection>& dirs,
                                                  const DataMatrices& data,
                                                  const SymMatrix& r) {
  if (points.empty() || dirs.empty())
    throw ConfigError("strong-convexity estimation needs points and directions");
  StrongConvexityEstimate est{std::numeric_limits<double>::infinity(),
                              std::numeric_limits<double>::infinity(), 0, 0,
                              points.size() * dirs.size()};
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t d = 0; d < dirs.size(); ++d) {
      const double action =
          convex_hessian_action(points[i], dirs[d].l, dirs[d].sigma, data, r);
      if (action < est.min_action) {
        est.min_action = action;
        est.alpha_hat = action / 2.0;
        est.point_index = i;
        est.dir_index = d;
      }
    }
  }
  return est;
}

DominanceEstimate estimate_gradient_dominance(const std::vector<Matrix>& policies,
                                              const DataMatrices& data, const SymMatrix& q,
                                              const SymMatrix& r, double j_star) {
  const GeneralizedCost cost(data, q, r);
  DominanceEstimate est{0.0, 0, 0};
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const ClosedLoopEval eval = evaluate(policies[i], data, cost);
    const double pg =
        (data.pi_x_minus().mat() * (2.0 * eval.gradient_factor * eval.state_covariance.mat()))
            .norm();
    if (pg <= 1e-12) continue;  // at the optimum the ratio is undefined
    ++est.samples;
    const double ratio = (eval.cost - j_star) / (pg * pg);
    if (ratio > est.mu_hat) {
      est.mu_hat = ratio;
      est.argmax = i;
    }
  }
  if (est.samples == 0)
    throw GenerationError("every sampled policy was optimal to tolerance");
  return est;
}

OracleSolution riccati_oracle(const SystemModel& system, const DataMatrices& data) {
  if (data.state_dim() != system.state_dim() || data.input_dim() != system.input_dim())
    throw DimensionError("data dimensions do not match the plant");
  linalg::DareSolution dare = linalg::solve_dare(system.a, system.b, system.q, system.r);
  const double j_star = dare.p.trace();
  Matrix g_star = policy_from_gain(dare.gain, data);
  return OracleSolution{std::move(dare.gain), std::move(dare.p), j_star, std::move(g_star)};
}

std::vector<Matrix> solution_set_probe(const Matrix& g_star, const DataMatrices& data,
                                       int count, std::mt19937_64& rng) {
  if (count < 0) throw ConfigError("probe count must be nonnegative");
  std::vector<Matrix> probes;
  probes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const Matrix delta =
        data.pi_d_minus().mat() * data::gaussian(data.length(), data.state_dim(), rng);
    probes.push_back(g_star + delta);
  }
  return probes;
}

namespace {

Matrix fd_gradient_once(const std::function<double(const Matrix&)>& costfn, const Matrix& g,
                        double h) {
  Matrix grad(g.rows(), g.cols());
  Matrix probe = g;
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      probe(i, j) = g(i, j) + h;
      const double plus = costfn(probe);
      probe(i, j) = g(i, j) - h;
      const double minus = costfn(probe);
      probe(i, j) = g(i, j);
      grad(i, j) = (plus - minus) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace

Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& costfn,
                                  const Matrix& g, double h) {
  if (h <= 0.0) throw ConfigError("finite-difference step must be positive");
  try {
    return fd_gradient_once(costfn, g, h);
  } catch (const UnstableError&) {
    try {
      return fd_gradient_once(costfn, g, h / 2.0);
    } catch (const UnstableError& e) {
      throw InfeasiblePerturbationError(
          std::string("finite-difference probe left the feasible region: ") + e.what());
    }
  }
}

double finite_difference_second(const std::function<double(const Matrix&)>& costfn,
                                const Matrix& g, const Matrix& z, double h) {
  if (h <= 0.0) throw ConfigError("finite-difference step must be positive");
  auto once = [&](double step) {
    return (costfn(g + step * z) - 2.0 * costfn(g) + costfn(g - step * z)) / (step * step);
  };
  try {
    return once(h);
  } catch (const UnstableError&) {
    try {
      return once(h / 2.0);
    } catch (const UnstableError& e) {
      throw InfeasiblePerturbationError(
          std::string("finite-difference probe left the feasible region: ") + e.what());
    }
  }
}

}  // namespace deepo::certify
