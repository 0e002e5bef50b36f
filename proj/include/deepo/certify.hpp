#pragma once

#include <functional>
#include <random>
#include <vector>

#include "deepo/data.hpp"
#include "deepo/policy.hpp"

namespace deepo::certify {

using data::DataMatrices;
using data::SystemModel;
using linalg::Matrix;
using linalg::SymMatrix;

/// Point of the convex reparameterization: G = L Sigma^{-1} with Sigma = X_- L
/// and the stability LMI  [Sigma - I, X_+ L; L' X_+', Sigma] >= 0.
struct ConvexPoint {
  Matrix l;
  SymMatrix sigma;
};

/// Residuals of the two convex-feasibility constraints.
struct ConvexFeasibility {
  double linear_residual;  // ||Sigma - X_- L||_F
  double lmi_min_eig;      // smallest eigenvalue of the block LMI

  bool feasible(double tol = 1e-8) const {
    return linear_residual <= tol && lmi_min_eig >= -tol;
  }
};

ConvexFeasibility check_convex(const ConvexPoint& point, const DataMatrices& data);

// Change of variables L = G Sigma_G, Sigma = Sigma_G; the result is feasible
// for the convex program and f(L, Sigma) = J(G).
ConvexPoint from_policy(const Matrix& g, const DataMatrices& data,
                        double stability_margin = linalg::kDefaultStabilityMargin);

// G = L Sigma^{-1}. Throws SingularSigmaError when Sigma is numerically
// singular; feasibility of the result is the caller's check.
Matrix to_policy(const ConvexPoint& point);

// f(L, Sigma) = Tr{Q Sigma} + Tr{L Sigma^{-1} L' U_-' R U_-}.
double evaluate_f(const ConvexPoint& point, const DataMatrices& data, const SymMatrix& q,
                  const SymMatrix& r);

// Hessian of f along (L_dir, Sigma_dir):
//   2 ||R^{1/2} (U_- L_dir - U_- L Sigma^{-1} Sigma_dir) Sigma^{-1/2}||_F^2,
// nonnegative for every direction (convexity).
double convex_hessian_action(const ConvexPoint& point, const Matrix& l_dir,
                             const SymMatrix& sigma_dir, const DataMatrices& data,
                             const SymMatrix& r);

/// Direction satisfying the linearized constraint Sigma_dir = X_- L_dir with
/// unit joint Frobenius norm.
struct FeasibleDirection {
  Matrix l;
  SymMatrix sigma;
};

// Draw Sigma_dir symmetric Gaussian, set L_dir = X_-^dagger Sigma_dir +
// Pi_{X_-} N with Gaussian N, normalize the pair.
FeasibleDirection random_feasible_direction(const DataMatrices& data, std::mt19937_64& rng);

// Random direction in the nullspace of X_- with unit Frobenius norm.
Matrix random_nullspace_direction(const DataMatrices& data, std::mt19937_64& rng);

// Feasible policies inside the sublevel set {J <= max_cost}: nullspace
// perturbations (and pairwise convex combinations) of the anchor policies,
// rejection-sampled on cost and stability.
std::vector<Matrix> sample_sublevel_policies(const DataMatrices& data, const SymMatrix& q,
                                             const SymMatrix& r,
                                             const std::vector<Matrix>& anchors,
                                             int count, double max_cost,
                                             std::mt19937_64& rng,
                                             double perturbation_scale = 0.05);

/// Monte-Carlo lower estimate of the strong-convexity constant, with the
/// (point, direction) pair attaining the minimum.
struct StrongConvexityEstimate {
  double alpha_hat;
  double min_action;     // smallest Hessian action observed
  std::size_t point_index;
  std::size_t dir_index;
  std::size_t samples;
};

// alpha_hat = min over all (point, direction) pairs of convex_hessian_action/2.
StrongConvexityEstimate estimate_strong_convexity(const std::vector<ConvexPoint>& points,
                                                  const std::vector<FeasibleDirection>& dirs,
                                                  const DataMatrices& data,
                                                  const SymMatrix& r);

/// Monte-Carlo upper estimate of the gradient-dominance constant:
/// mu_hat = max over samples of (J(G) - J*) / ||Pi_{X_-} grad J(G)||_F^2.
struct DominanceEstimate {
  double mu_hat;
  std::size_t argmax;
  std::size_t samples;  // policies that passed the non-optimality filter
};

// Policies with ||Pi grad|| <= 1e-12 are excluded (the ratio is undefined at
// the optimum); throws when no sample survives.
DominanceEstimate estimate_gradient_dominance(const std::vector<Matrix>& policies,
                                              const DataMatrices& data, const SymMatrix& q,
                                              const SymMatrix& r, double j_star);

/// Model-based reference solution used to certify data-driven results.
struct OracleSolution {
  Matrix k_star;
  SymMatrix p_star;
  double j_star;   // Tr{P*}, the optimal cost under E[x0 x0'] = I
  Matrix g_star;   // D_-^dagger [K*; I_n]
};

OracleSolution riccati_oracle(const SystemModel& system, const DataMatrices& data);

// count random probes G* + Delta with Delta = Pi_{D_-} N: every probe keeps
// the recovered gain and the cost of G*.
std::vector<Matrix> solution_set_probe(const Matrix& g_star, const DataMatrices& data,
                                       int count, std::mt19937_64& rng);

// Entrywise central differences (costfn(G + h E_ij) - costfn(G - h E_ij)) / 2h.
// When a probe throws UnstableError the whole sweep is retried once at h/2;
// a second failure raises InfeasiblePerturbationError.
Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& costfn,
                                  const Matrix& g, double h = 1e-6);

// Second central difference (costfn(G+hZ) - 2 costfn(G) + costfn(G-hZ)) / h^2,
// with the same single halving retry.
double finite_difference_second(const std::function<double(const Matrix&)>& costfn,
                                const Matrix& g, const Matrix& z, double h = 1e-4);

}  // namespace deepo::certify
