#pragma once

#include "deepo/regularization.hpp"

namespace deepo {

// Tolerance on the linear data constraint ||X_- G - I||_F for feasibility.
inline constexpr double kFeasibilityTol = 1e-8;

/// Constraint residual and closed-loop spectral radius of a candidate policy.
struct Feasibility {
  double constraint_residual;  // ||X_- G - I_n||_F
  double spectral_radius;      // rho(X_+ G)

  bool feasible(double stability_margin = linalg::kDefaultStabilityMargin) const {
    return constraint_residual <= kFeasibilityTol &&
           spectral_radius < 1.0 - stability_margin;
  }
};

Feasibility check_policy(const Matrix& g, const DataMatrices& data);

// Throws InfeasibleError / UnstableError when the policy is outside the
// constraint set.
void require_feasible(const Matrix& g, const DataMatrices& data,
                      double stability_margin = linalg::kDefaultStabilityMargin);

/// Value matrix, state covariance, and cost of a feasible policy.
/// Satisfies  P = Q + G' R_eff G + G' X_+' P X_+ G,
///            Sigma = I + X_+ G Sigma G' X_+',
///            cost = Tr{P} = Tr{(Q + G' R_eff G) Sigma}.
struct ClosedLoopEval {
  SymMatrix value_matrix;     // P
  SymMatrix state_covariance; // Sigma
  Matrix gradient_factor;     // E = (R_eff + X_+' P X_+) G; gradient is 2 E Sigma
  double cost;
  Matrix closed_loop;         // X_+ G
};

ClosedLoopEval evaluate(const Matrix& g, const DataMatrices& data, const GeneralizedCost& cost,
                        double stability_margin = linalg::kDefaultStabilityMargin);
ClosedLoopEval evaluate(const Matrix& g, const DataMatrices& data, const SymMatrix& q,
                        const SymMatrix& r,
                        double stability_margin = linalg::kDefaultStabilityMargin);

// Cost of the closed loop without requiring X_- G = I: the objective extends
// smoothly off the constraint manifold wherever rho(X_+ G) < 1. This is what
// entrywise finite-difference probes evaluate.
double unconstrained_cost(const Matrix& g, const DataMatrices& data,
                          const GeneralizedCost& cost,
                          double stability_margin = linalg::kDefaultStabilityMargin);

// 2 (R_eff + X_+' P X_+) G Sigma.
Matrix gradient(const Matrix& g, const DataMatrices& data, const GeneralizedCost& cost,
                double stability_margin = linalg::kDefaultStabilityMargin);
Matrix gradient(const Matrix& g, const DataMatrices& data, const SymMatrix& q,
                const SymMatrix& r,
                double stability_margin = linalg::kDefaultStabilityMargin);

// G - eta Pi_{X_-} grad; preserves X_- G = I exactly and re-checks stability.
// Throws StepUnstableError when the step exits the stability region.
Matrix projected_gradient_step(const Matrix& g, double eta, const DataMatrices& data,
                               const GeneralizedCost& cost,
                               double stability_margin = linalg::kDefaultStabilityMargin);

// Quadratic form of the cost Hessian along Z:
//   2 Tr{Z'(R_eff + X_+' P X_+) Z Sigma} + 4 Tr{Z' X_+' P'[Z] X_+ G Sigma},
// where P'[Z] solves P' = (Z'E + E'Z) + G' X_+' P' X_+ G (the Lyapunov closed
// form of the directional derivative of P).
double hessian_quadratic_form(const Matrix& g, const Matrix& z, const DataMatrices& data,
                              const GeneralizedCost& cost,
                              double stability_margin = linalg::kDefaultStabilityMargin);
double hessian_quadratic_form(const Matrix& g, const Matrix& z, const DataMatrices& data,
                              const SymMatrix& q, const SymMatrix& r,
                              double stability_margin = linalg::kDefaultStabilityMargin);

// Closed-form smoothness constant of the cost over the sublevel set {J <= a}:
//   l(a) = 2 ||U_-||^2 ||R|| a / s + (xi + 2) ||X_+||_F^2 a^2 / s,
//   xi   = (||U_-||^2 ||R|| + ||X_+||^2 a + a) / s - 1,   s = sigma_min(Q).
// Monotone increasing in a; very conservative in practice.
double smoothness_bound(double a, const DataMatrices& data, const SymMatrix& q,
                        const SymMatrix& r);

// G0 = D_-^dagger [K0; I_n]: feasible whenever K0 is stabilizing, with
// U_- G0 = K0 and Pi_{D_-} G0 = 0.
Matrix policy_from_gain(const Matrix& k0, const DataMatrices& data,
                        double stability_margin = linalg::kDefaultStabilityMargin);

// K = U_- G.
Matrix recover_gain(const Matrix& g, const DataMatrices& data);

}  // namespace deepo
