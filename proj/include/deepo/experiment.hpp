#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "deepo/certify.hpp"
#include "deepo/optimizer.hpp"

namespace deepo::cli {

using data::DataMatrices;
using data::SystemModel;
using linalg::Matrix;

/// Everything a run needs, reproducible from this struct plus nothing else.
struct ExperimentConfig {
  // plant source
  std::string system_source = "benchmark";  // benchmark | random
  int state_dim = 4;                        // random source only
  int input_dim = 2;
  double target_rho = 0.8;

  // data collection
  long data_length = 10;  // T
  std::string data_file = "data.txt";  // relative paths resolve under output_dir

  // optimizer
  double eta = 2e-3;
  bool line_search = false;
  long max_iter = 1000;
  double grad_tol = 1e-8;
  double stability_margin = 1e-9;

  // regularizer weights applied by the deepo-ce / deepo-rob algorithms
  double lambda = 10.0;
  double gamma = 10.0;

  // initial policy: zero-gain | given-gain | perturbed | auto
  // (auto = perturbed for deepo-ce, zero-gain otherwise)
  std::string init = "auto";
  std::vector<double> k0;          // row-major m*n values for given-gain
  double init_noise_std = 0.1;     // entry stddev of the nullspace perturbation

  std::uint64_t seed = 1;
  std::string output_dir = ".";

  void validate() const;
  std::filesystem::path resolve(const std::string& name) const;

  std::string to_json() const;
  static ExperimentConfig from_json_file(const std::filesystem::path& path);
};

SystemModel make_system(const ExperimentConfig& config);

struct RunReport {
  std::string algorithm;
  std::string stop_reason;
  long iterations = 0;
  double final_cost = 0.0;       // objective at the final iterate
  double final_cost_plain = 0.0; // plain LQR cost at the final iterate
  double reference_cost = 0.0;   // denominator of the relative error
  double final_rel_err = 0.0;
  double final_proj_grad_norm = 0.0;
  double gain_error = 0.0;       // ||U_- G - K*||_F against the Riccati oracle
  Matrix final_gain;
  std::string trace_path;
  double sigma_min_d = 0.0;
  double wall_seconds = 0.0;

  std::string text() const;
};

// Generates (or regenerates) the excitation data for the configured plant,
// certifies the rank condition (bounded resampling on failure), and writes the
// data file. Returns the file path.
std::filesystem::path cmd_gen_data(const ExperimentConfig& config);

// Runs one of the three algorithms (deepo | deepo-ce | deepo-rob) on the
// configured data file and writes the trace CSV next to it. Regularized runs
// use a self-referential optimum (pre-run to grad_tol 1e-11) as the
// relative-error denominator; the plain run uses the Riccati oracle.
RunReport cmd_run(const ExperimentConfig& config, const std::string& algorithm);

/// Least-squares line through log(rel_err) vs k over the tail half of the
/// resolvable window (points with rel_err > floor_tol).
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  long first_k = 0;
  long last_k = 0;
  long points = 0;
};

RateFit fit_log_linear(std::span<const double> rel_err, double floor_tol = 1e-13);

// Reads >= 2 trace CSVs (cmd_run format), writes an aligned-by-iteration table
// of their rel_err columns to `out`, and prints fitted log-linear rates to
// `summary`.
void cmd_compare(const std::vector<std::filesystem::path>& traces,
                 const std::filesystem::path& out, std::ostream& summary);

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;  // deterministic summary numbers
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  double alpha_hat = 0.0;
  double mu_hat = 0.0;
  std::uint64_t seed = 0;
  int failures() const;
  bool all_passed() const { return failures() == 0; }
  std::string text() const;  // timing-free, byte-stable for a given seed
};

// The full numerical certificate suite on the configured data: gradient and
// Hessian finite-difference checks, cost/parameterization identity, convexity
// and dominance estimates, the Monte-Carlo smoothness bound, the implicit
// regularization audit, and solution-set flatness probes.
VerifyReport cmd_verify(const ExperimentConfig& config);

}  // namespace deepo::cli
