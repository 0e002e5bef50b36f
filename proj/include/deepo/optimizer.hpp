#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "deepo/policy.hpp"

namespace deepo {

struct OptimizerConfig {
  double eta = 2e-3;        // fixed stepsize, or the line-search starting point
  bool line_search = false; // backtracking: halve eta until feasible + sufficient decrease
  double armijo = 1e-4;     // sufficient-decrease parameter for the line search
  long max_iter = 100000;
  double grad_tol = 1e-8;   // stop when ||Pi_{X_-} grad||_F <= grad_tol
  double stability_margin = linalg::kDefaultStabilityMargin;
  bool record_iterates = true;

  void validate() const;
};

enum class StopReason { GradientTolerance, MaxIterations, StepUnstable };

const char* to_string(StopReason reason);

struct TraceRecord {
  long k;
  double cost;            // objective value at G^k (regularized when weights are nonzero)
  double cost_plain;      // plain LQR cost J(G^k)
  double proj_grad_norm;  // ||Pi_{X_-} grad||_F
  double nullspace_norm;  // ||Pi_{D_-} G^k||_F
  double eta;             // stepsize taken from this iterate (0 at the final record)
};

class OptimizerTrace {
 public:
  std::vector<TraceRecord> records;
  std::vector<Matrix> iterates;  // retained G^k, parallel to records (may be empty)
  Regularization reg;
  StopReason stop = StopReason::MaxIterations;
  long stop_iteration = 0;       // index at which the stop condition fired
  double stop_spectral_radius = 0.0;  // rho that triggered StepUnstable

  long iterations() const { return static_cast<long>(records.size()) - 1; }
  const TraceRecord& final_record() const { return records.back(); }
  const Matrix& final_policy() const;
};

// Projected gradient descent on the generalized objective, starting from a
// feasible G0. Every iterate is re-certified; the final iterate is always
// recorded. A step that exits the stability region ends the run with
// StopReason::StepUnstable and the offending iteration index.
OptimizerTrace run_optimizer(const Matrix& g0, const OptimizerConfig& cfg,
                             const DataMatrices& data, const GeneralizedCost& cost);

// Plain DeePO: lambda = gamma = 0.
OptimizerTrace run_deepo(const Matrix& g0, const OptimizerConfig& cfg,
                         const DataMatrices& data, const SymMatrix& q, const SymMatrix& r);

// Regularized DeePO on a prepared cost spec.
OptimizerTrace run_regularized(const Matrix& g0, const OptimizerConfig& cfg,
                               const DataMatrices& data, const GeneralizedCost& cost);

/// Per-iterate nullspace component ||Pi_{D_-} G^k||_F, recomputed from the
/// retained iterates.
struct NullspaceAudit {
  std::vector<double> norms;
  double max_norm = 0.0;
  long argmax = 0;
};

NullspaceAudit implicit_regularization_audit(const OptimizerTrace& trace,
                                             const DataMatrices& data);

// ||Pi_{D_-} Pi_{X_-} grad J(G)||_F; identically zero for feasible G because
// the projected gradient lies in the row space of D_-.
double orthogonality_residual(const Matrix& g, const DataMatrices& data,
                              const GeneralizedCost& cost);
double orthogonality_residual(const Matrix& g, const DataMatrices& data, const SymMatrix& q,
                              const SymMatrix& r);

// Comma-separated trace with a header row. Plain runs emit
//   k,cost,proj_grad_norm,nullspace_norm,eta
// regularized runs append lambda,gamma,reg_cost (cost column stays the plain
// LQR cost). An optional reference value appends a rel_err column
// (cost - ref) / ref computed on the objective.
void write_trace_csv(const OptimizerTrace& trace, std::ostream& os,
                     std::optional<double> reference_cost = std::nullopt);
void write_trace_csv(const OptimizerTrace& trace, const std::filesystem::path& path,
                     std::optional<double> reference_cost = std::nullopt);

}  // namespace deepo
