#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "deepo/certify.hpp"
#include "deepo/optimizer.hpp"
#include "test_support.hpp"

using namespace deepo;
using linalg::Matrix;

namespace {

OptimizerConfig benchmark_config(long max_iter = 1000, double grad_tol = 1e-8) {
  OptimizerConfig cfg;
  cfg.eta = 2e-3;
  cfg.max_iter = max_iter;
  cfg.grad_tol = grad_tol;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  OptimizerConfig cfg;
  cfg.eta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = OptimizerConfig{};
  cfg.grad_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = OptimizerConfig{};
  cfg.armijo = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = OptimizerConfig{};
  cfg.stability_margin = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("plain run: descent, constraint preservation, gain recovery") {
  const auto setup = test_support::make_setup();
  const Matrix g0 = test_support::zero_gain_policy(setup.batch);
  const auto oracle = certify::riccati_oracle(setup.system, setup.batch);

  const OptimizerTrace trace =
      run_deepo(g0, benchmark_config(5000, 1e-9), setup.batch, setup.system.q, setup.system.r);
  CHECK(trace.stop == StopReason::GradientTolerance);
  CHECK(trace.records.size() == trace.iterates.size());

  const double j0 = trace.records.front().cost;
  for (std::size_t i = 1; i < trace.records.size(); ++i)
    CHECK(trace.records[i].cost <= trace.records[i - 1].cost + 1e-12 * (1.0 + j0));
  for (const Matrix& g : trace.iterates)
    CHECK((setup.batch.x_minus() * g - Matrix::Identity(4, 4)).norm() <= 1e-8);

  CHECK((recover_gain(trace.final_policy(), setup.batch) - oracle.k_star).norm() <= 1e-4);
  // Every record before the last took a step at the configured size.
  for (std::size_t i = 0; i + 1 < trace.records.size(); ++i)
    CHECK(trace.records[i].eta == 2e-3);
  CHECK(trace.final_record().eta == 0.0);
}

TEST_CASE("starting at the optimum terminates immediately") {
  const auto setup = test_support::make_setup();
  const auto oracle = certify::riccati_oracle(setup.system, setup.batch);
  const OptimizerTrace trace = run_deepo(oracle.g_star, benchmark_config(1000, 1e-6),
                                         setup.batch, setup.system.q, setup.system.r);
  CHECK(trace.stop == StopReason::GradientTolerance);
  CHECK(trace.iterations() == 0);
  CHECK(trace.records.size() == 1);
}

TEST_CASE("infeasible start is rejected") {
  const auto setup = test_support::make_setup();
  Matrix g0 = test_support::zero_gain_policy(setup.batch);
  g0(2, 1) += 0.5;
  CHECK_THROWS_AS(run_deepo(g0, benchmark_config(), setup.batch, setup.system.q,
                            setup.system.r),
                  InfeasibleError);
}

TEST_CASE("oversized fixed step reports step-unstable with its iteration") {
  const auto setup = test_support::make_setup();
  const Matrix g0 = test_support::zero_gain_policy(setup.batch);
  OptimizerConfig cfg = benchmark_config();
  cfg.eta = 1e3;
  const OptimizerTrace trace =
      run_deepo(g0, cfg, setup.batch, setup.system.q, setup.system.r);
  CHECK(trace.stop == StopReason::StepUnstable);
  CHECK(trace.stop_iteration == 0);
  CHECK(trace.stop_spectral_radius >= 1.0);
}

TEST_CASE("line search recovers from an oversized starting stepsize") {
  const auto setup = test_support::make_setup();
  const Matrix g0 = test_support::zero_gain_policy(setup.batch);
  OptimizerConfig cfg = benchmark_config(300, 1e-8);
  cfg.eta = 1.0;  // far beyond the stable fixed step
  cfg.line_search = true;
  const OptimizerTrace trace =
      run_deepo(g0, cfg, setup.batch, setup.system.q, setup.system.r);
  CHECK(trace.stop != StopReason::StepUnstable);
  const double j0 = trace.records.front().cost;
  for (std::size_t i = 1; i < trace.records.size(); ++i)
    CHECK(trace.records[i].cost <= trace.records[i - 1].cost + 1e-12 * (1.0 + j0));
  // At least one halving happened somewhere.
  bool halved = false;
  for (const TraceRecord& rec : trace.records)
    if (rec.eta > 0.0 && rec.eta < 1.0) halved = true;
  CHECK(halved);
}

TEST_CASE("implicit regularization audit on a clean start") {
  const auto setup = test_support::make_setup();
  const Matrix g0 = test_support::zero_gain_policy(setup.batch);
  const OptimizerTrace trace =
      run_deepo(g0, benchmark_config(), setup.batch, setup.system.q, setup.system.r);
  const NullspaceAudit audit = implicit_regularization_audit(trace, setup.batch);
  CHECK(audit.max_norm <= 1e-8);
  CHECK(audit.norms.size() == trace.records.size());
  // Recorded nullspace norms agree with the recomputation.
  for (std::size_t i = 0; i < audit.norms.size(); ++i)
    CHECK(audit.norms[i] == doctest::Approx(trace.records[i].nullspace_norm).epsilon(1e-12));
}

TEST_CASE("nullspace component is frozen under the plain update") {
  const auto setup = test_support::make_setup();
  std::mt19937_64 rng(31);
  const Matrix g0 = test_support::zero_gain_policy(setup.batch) +
                    0.1 * (setup.batch.pi_d_minus().mat() * data::gaussian(10, 4, rng));
  const OptimizerTrace trace =
      run_deepo(g0, benchmark_config(500, 1e-12), setup.batch, setup.system.q, setup.system.r);
  const Matrix frozen = setup.batch.pi_d_minus().mat() * g0;
  for (const Matrix& g : trace.iterates)
    CHECK((setup.batch.pi_d_minus().mat() * g - frozen).norm() <= 1e-10);
}

TEST_CASE("projected gradient stays in the row space of the data") {
  const auto setup = test_support::make_setup();
  std::mt19937_64 rng(32);
  const Matrix anchor = test_support::zero_gain_policy(setup.batch);
  for (int i = 0; i < 50; ++i) {
    const Matrix g = test_support::random_feasible_policy(setup.batch, anchor, rng);
    const double grad_norm =
        gradient(g, setup.batch, setup.system.q, setup.system.r).norm();
    CHECK(orthogonality_residual(g, setup.batch, setup.system.q, setup.system.r) <=
          1e-9 * grad_norm);
  }
}

TEST_CASE("trace CSV format") {
  const auto setup = test_support::make_setup();
  const Matrix g0 = test_support::zero_gain_policy(setup.batch);
  const OptimizerTrace trace =
      run_deepo(g0, benchmark_config(5, 1e-14), setup.batch, setup.system.q, setup.system.r);

  std::ostringstream plain_csv;
  write_trace_csv(trace, plain_csv);
  CHECK(plain_csv.str().rfind("k,cost,proj_grad_norm,nullspace_norm,eta\n", 0) == 0);
  // Header plus one row per record.
  long lines = 0;
  for (char c : plain_csv.str())
    if (c == '\n') ++lines;
  CHECK(lines == static_cast<long>(trace.records.size()) + 1);

  std::ostringstream with_ref;
  write_trace_csv(trace, with_ref, 5.0);
  CHECK(with_ref.str().rfind("k,cost,proj_grad_norm,nullspace_norm,eta,rel_err\n", 0) == 0);

  const GeneralizedCost reg_cost(setup.batch, setup.system.q, setup.system.r,
                                 Regularization{10.0, 0.0});
  const OptimizerTrace reg_trace = run_regularized(g0, benchmark_config(5, 1e-14),
                                                   setup.batch, reg_cost);
  std::ostringstream reg_csv;
  write_trace_csv(reg_trace, reg_csv);
  CHECK(reg_csv.str().rfind(
            "k,cost,proj_grad_norm,nullspace_norm,eta,lambda,gamma,reg_cost\n", 0) == 0);
}
