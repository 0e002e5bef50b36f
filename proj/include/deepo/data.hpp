#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "deepo/linalg.hpp"

namespace deepo::data {

using linalg::Matrix;
using linalg::Projector;
using linalg::SymMatrix;
using linalg::Vector;

/// Ground-truth plant x(t+1) = A x(t) + B u(t) with quadratic penalties.
/// Used for data generation and model-based oracles only; the optimizer never
/// sees (A, B).
struct SystemModel {
  Matrix a;
  Matrix b;
  SymMatrix q;
  SymMatrix r;

  // Validates Q, R positive definite and (A, B) controllable.
  SystemModel(Matrix a_in, Matrix b_in, SymMatrix q_in, SymMatrix r_in);

  Eigen::Index state_dim() const { return a.rows(); }
  Eigen::Index input_dim() const { return b.cols(); }
};

/// State/input record of one rollout: states has T+1 columns, inputs has T.
struct Trajectory {
  Matrix states;
  Matrix inputs;

  Eigen::Index length() const { return inputs.cols(); }
  Eigen::Index state_dim() const { return states.rows(); }
  Eigen::Index input_dim() const { return inputs.rows(); }
};

/// The offline batch (U_-, X_-, X_+) with cached pseudoinverses, nullspace
/// projectors, and the full-row-rank certificate for D_- = [U_-; X_-].
class DataMatrices {
 public:
  DataMatrices(Matrix u_minus, Matrix x_minus, Matrix x_plus,
               std::optional<std::uint64_t> seed = std::nullopt);

  const Matrix& u_minus() const { return u_minus_; }
  const Matrix& x_minus() const { return x_minus_; }
  const Matrix& x_plus() const { return x_plus_; }
  const Matrix& d_minus() const { return d_minus_; }
  const Matrix& d_pseudoinverse() const { return d_pinv_; }
  const Projector& pi_x_minus() const { return pi_x_minus_; }
  const Projector& pi_d_minus() const { return pi_d_minus_; }

  double sigma_min_d() const { return sigma_min_d_; }
  std::optional<std::uint64_t> seed() const { return seed_; }

  Eigen::Index state_dim() const { return x_minus_.rows(); }
  Eigen::Index input_dim() const { return u_minus_.rows(); }
  Eigen::Index length() const { return u_minus_.cols(); }

 private:
  Matrix u_minus_, x_minus_, x_plus_, d_minus_, d_pinv_;
  Projector pi_x_minus_;
  Projector pi_d_minus_;
  double sigma_min_d_;
  std::optional<std::uint64_t> seed_;
};

// Rolls the plant forward: inputs has one column per step, x0 is the initial
// state. Resulting states have T+1 columns.
Trajectory simulate(const SystemModel& system, const Matrix& inputs, const Vector& x0);

// Slices a trajectory into the offline batch and certifies the rank condition
// rank(D_-) = m + n.
DataMatrices assemble(const Trajectory& trajectory);

// Column-concatenates several rollouts into one batch; the rank certificate
// applies to the combined D_-.
DataMatrices assemble_from_experiments(const std::vector<Trajectory>& trajectories);

// A, B with i.i.d. standard normal entries, A rescaled so rho(A) = target_rho,
// Q = I_n, R = I_m. Resamples (bounded) until (A, B) is controllable.
SystemModel random_system(int n, int m, double target_rho, std::uint64_t seed);

// The fixed 4-state / 2-input benchmark plant with Q = I_4, R = I_2.
SystemModel benchmark_system();

// Matrix with i.i.d. standard normal entries.
Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

// Deterministic seed derivation for independent sub-streams (splitmix64 mix).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Self-describing text format: dimensions, the three matrices at 17
// significant digits (lossless double round trip), and the generator seed.
void save(const DataMatrices& data, const std::filesystem::path& path);

// Re-runs the rank certificate on load.
DataMatrices load(const std::filesystem::path& path);

}  // namespace deepo::data
