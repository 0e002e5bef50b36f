#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "deepo/certify.hpp"
#include "deepo/policy.hpp"
#include "test_support.hpp"

using namespace deepo;
using linalg::Matrix;
using linalg::SymMatrix;

TEST_CASE("zero-gain policy evaluates to the open-loop oracle cost") {
  const auto setup = test_support::make_setup();
  const Matrix g0 = test_support::zero_gain_policy(setup.batch);
  const ClosedLoopEval eval = evaluate(g0, setup.batch, setup.system.q, setup.system.r);

  // Model-based oracle: with K = 0 the cost is Tr{P}, P = Q + A'PA.
  const SymMatrix p_open =
      linalg::solve_discrete_lyapunov_obs(setup.system.a, setup.system.q);
  CHECK(eval.cost == doctest::Approx(p_open.trace()).epsilon(1e-8));

  // Full evaluation bundle invariants.
  const Matrix u_g = setup.batch.u_minus() * g0;
  const Matrix w = setup.system.q.mat() + u_g.transpose() * setup.system.r.mat() * u_g;
  CHECK((eval.value_matrix.mat() - w -
         eval.closed_loop.transpose() * eval.value_matrix.mat() * eval.closed_loop)
            .norm() <= 1e-10 * (1.0 + eval.value_matrix.mat().norm()));
  CHECK((eval.state_covariance.mat() - Matrix::Identity(4, 4) -
         eval.closed_loop * eval.state_covariance.mat() * eval.closed_loop.transpose())
            .norm() <= 1e-10 * (1.0 + eval.state_covariance.mat().norm()));
  CHECK(eval.state_covariance.min_eigenvalue() >= 1.0 - 1e-10);
  CHECK((w * eval.state_covariance.mat()).trace() ==
        doctest::Approx(eval.cost).epsilon(1e-8));
}

TEST_CASE("optimal policy evaluates to the Riccati cost") {
  const auto setup = test_support::make_setup();
  const auto oracle = certify::riccati_oracle(setup.system, setup.batch);
  const double j = evaluate(oracle.g_star, setup.batch, setup.system.q, setup.system.r).cost;
  CHECK(j == doctest::Approx(oracle.j_star).epsilon(1e-8));
}

TEST_CASE("evaluate rejects policies off the constraint manifold") {
  const auto setup = test_support::make_setup();
  Matrix g = test_support::zero_gain_policy(setup.batch);
  g(0, 0) += 0.1;  // breaks X_- G = I
  CHECK_THROWS_AS(evaluate(g, setup.batch, setup.system.q, setup.system.r), InfeasibleError);
}

TEST_CASE("closed-loop identity against the true plant") {
  const auto setup = test_support::make_setup();
  std::mt19937_64 rng(21);
  const Matrix g = test_support::random_feasible_policy(
      setup.batch, test_support::zero_gain_policy(setup.batch), rng);
  const Matrix k = recover_gain(g, setup.batch);
  CHECK((setup.batch.x_plus() * g - setup.system.a - setup.system.b * k).norm() <= 1e-10);
}

TEST_CASE("analytic gradient matches central differences") {
  const auto setup = test_support::make_setup();
  const GeneralizedCost cost(setup.batch, setup.system.q, setup.system.r);
  auto costfn = [&](const Matrix& g) { return unconstrained_cost(g, setup.batch, cost); };

  std::mt19937_64 rng(22);
  const Matrix anchor = test_support::zero_gain_policy(setup.batch);
  for (int i = 0; i < 20; ++i) {
    const Matrix g = test_support::random_feasible_policy(setup.batch, anchor, rng);
    const Matrix analytic = gradient(g, setup.batch, cost);
    const Matrix fd = certify::finite_difference_gradient(costfn, g, 1e-6);
    CHECK((fd - analytic).norm() <= 1e-5 * analytic.norm());
  }
}

TEST_CASE("projected gradient vanishes at the optimum") {
  const auto setup = test_support::make_setup();
  const auto oracle = certify::riccati_oracle(setup.system, setup.batch);
  const Matrix grad = gradient(oracle.g_star, setup.batch, setup.system.q, setup.system.r);
  CHECK((setup.batch.pi_x_minus().mat() * grad).norm() <= 1e-6 * grad.norm());
}

TEST_CASE("input-weight term of the gradient factor is linear in R") {
  const auto setup = test_support::make_setup();
  std::mt19937_64 rng(23);
  const Matrix g = test_support::random_feasible_policy(
      setup.batch, test_support::zero_gain_policy(setup.batch), rng);
  const SymMatrix r2(2.0 * setup.system.r.mat());
  const ClosedLoopEval e1 = evaluate(g, setup.batch, setup.system.q, setup.system.r);
  const ClosedLoopEval e2 = evaluate(g, setup.batch, setup.system.q, r2);
  // E = U'RU G + X_+' P X_+ G: doubling R doubles exactly the first term.
  const Matrix first1 = e1.gradient_factor -
                        setup.batch.x_plus().transpose() * e1.value_matrix.mat() *
                            e1.closed_loop;
  const Matrix first2 = e2.gradient_factor -
                        setup.batch.x_plus().transpose() * e2.value_matrix.mat() *
                            e2.closed_loop;
  CHECK((first2 - 2.0 * first1).norm() <= 1e-10 * (1.0 + first1.norm()));
}

TEST_CASE("projected gradient step") {
  const auto setup = test_support::make_setup();
  const GeneralizedCost cost(setup.batch, setup.system.q, setup.system.r);
  const Matrix g0 = test_support::zero_gain_policy(setup.batch);

  // eta = 0 leaves the policy unchanged.
  CHECK((projected_gradient_step(g0, 0.0, setup.batch, cost) - g0).norm() == 0.0);

  // Small steps descend and stay on the constraint manifold.
  Matrix g = g0;
  const double j0 = evaluate(g, setup.batch, cost).cost;
  double previous = j0;
  for (int k = 0; k < 1000; ++k) {
    g = projected_gradient_step(g, 2e-3, setup.batch, cost);
    CHECK((setup.batch.x_minus() * g - Matrix::Identity(4, 4)).norm() <= 1e-10);
    const double j = evaluate(g, setup.batch, cost).cost;
    CHECK(j <= previous + 1e-12 * (1.0 + j0));
    previous = j;
  }

  // An absurd stepsize leaves the stability region.
  CHECK_THROWS_AS(projected_gradient_step(g0, 1e3, setup.batch, cost), StepUnstableError);
}

TEST_CASE("Hessian quadratic form") {
  const auto setup = test_support::make_setup();
  const GeneralizedCost cost(setup.batch, setup.system.q, setup.system.r);
  auto costfn = [&](const Matrix& g) { return unconstrained_cost(g, setup.batch, cost); };
  const Matrix anchor = test_support::zero_gain_policy(setup.batch);
  std::mt19937_64 rng(24);

  // Zero direction gives zero.
  CHECK(hessian_quadratic_form(anchor, Matrix::Zero(10, 4), setup.batch, cost) == 0.0);

  for (int i = 0; i < 20; ++i) {
    const Matrix g = test_support::random_feasible_policy(setup.batch, anchor, rng);
    const Matrix z = certify::random_nullspace_direction(setup.batch, rng);
    const double analytic = hessian_quadratic_form(g, z, setup.batch, cost);
    const double fd = certify::finite_difference_second(costfn, g, z, 1e-4);
    CHECK(std::abs(fd - analytic) <= 1e-4 * std::abs(analytic));
    // Quadratic-form homogeneity.
    const double scaled = hessian_quadratic_form(g, 2.5 * z, setup.batch, cost);
    CHECK(std::abs(scaled - 6.25 * analytic) <= 1e-10 * (1.0 + std::abs(6.25 * analytic)));
  }
}

TEST_CASE("smoothness bound: positive, monotone, and dominating sampled curvature") {
  const auto setup = test_support::make_setup();
  const GeneralizedCost cost(setup.batch, setup.system.q, setup.system.r);
  const Matrix g0 = test_support::zero_gain_policy(setup.batch);
  const double j0 = evaluate(g0, setup.batch, cost).cost;

  const double l0 = smoothness_bound(j0, setup.batch, setup.system.q, setup.system.r);
  CHECK(l0 > 0.0);
  CHECK(std::isfinite(l0));
  CHECK(smoothness_bound(j0, setup.batch, setup.system.q, setup.system.r) <
        smoothness_bound(2.0 * j0, setup.batch, setup.system.q, setup.system.r));
  CHECK_THROWS_AS(smoothness_bound(0.0, setup.batch, setup.system.q, setup.system.r),
                  ConfigError);

  std::mt19937_64 rng(25);
  for (int i = 0; i < 20; ++i) {
    const Matrix g = test_support::random_feasible_policy(setup.batch, g0, rng, 0.02);
    if (unconstrained_cost(g, setup.batch, cost) > j0) continue;
    Matrix z = data::gaussian(10, 4, rng);
    z /= z.norm();
    CHECK(std::abs(hessian_quadratic_form(g, z, setup.batch, cost)) <= l0);
  }
}

TEST_CASE("policy construction from a gain") {
  const auto setup = test_support::make_setup();
  const auto oracle = certify::riccati_oracle(setup.system, setup.batch);

  const Matrix g0 = policy_from_gain(Matrix::Zero(2, 4), setup.batch);
  CHECK((setup.batch.x_minus() * g0 - Matrix::Identity(4, 4)).norm() <= 1e-10);
  CHECK((setup.batch.u_minus() * g0).norm() <= 1e-10);
  CHECK((setup.batch.pi_d_minus().mat() * g0).norm() <= 1e-10);

  // K* reproduces the oracle policy.
  const Matrix g_star = policy_from_gain(oracle.k_star, setup.batch);
  CHECK((g_star - oracle.g_star).norm() <= 1e-12);

  // A wildly destabilizing gain is rejected.
  CHECK_THROWS_AS(policy_from_gain(Matrix::Constant(2, 4, 50.0), setup.batch), UnstableError);
}

TEST_CASE("gain recovery and nullspace invariance") {
  const auto setup = test_support::make_setup();
  const auto oracle = certify::riccati_oracle(setup.system, setup.batch);
  CHECK((recover_gain(oracle.g_star, setup.batch) - oracle.k_star).norm() <= 1e-12);

  std::mt19937_64 rng(26);
  const Matrix delta =
      setup.batch.pi_d_minus().mat() * data::gaussian(10, 4, rng);
  CHECK((recover_gain(oracle.g_star + delta, setup.batch) - oracle.k_star).norm() <= 1e-12);
}
