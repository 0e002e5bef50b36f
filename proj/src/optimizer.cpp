#include "deepo/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace deepo {

namespace {

// Objective and gradient pieces for one iterate; the plain cost is solved
// separately only when the weights are nonzero.
struct IterateEval {
  double cost;        // objective
  double cost_plain;  // J(G)
  Matrix proj_grad;   // Pi_{X_-} grad
};

IterateEval eval_iterate(const Matrix& g, const DataMatrices& data,
                         const GeneralizedCost& cost, const GeneralizedCost* plain,
                         double margin) {
  const ClosedLoopEval eval = evaluate(g, data, cost, margin);
  const Matrix grad = 2.0 * eval.gradient_factor * eval.state_covariance.mat();
  double j_plain = eval.cost;
  if (plain != nullptr) {
    const SymMatrix w(plain->q().mat() +
                      g.transpose() * plain->r_eff().mat() * g);
    j_plain = linalg::solve_discrete_lyapunov_obs(eval.closed_loop, w, margin).trace();
  }
  return IterateEval{eval.cost, j_plain, data.pi_x_minus().mat() * grad};
}

}  // namespace

void OptimizerConfig::validate() const {
  if (!line_search && eta <= 0.0) throw ConfigError("fixed stepsize must be positive");
  if (line_search && eta <= 0.0) throw ConfigError("line-search starting stepsize must be positive");
  if (armijo <= 0.0 || armijo >= 1.0) throw ConfigError("armijo parameter must be in (0, 1)");
  if (max_iter < 0) throw ConfigError("max_iter must be nonnegative");
  if (grad_tol <= 0.0) throw ConfigError("grad_tol must be positive");
  if (stability_margin <= 0.0 || stability_margin >= 1.0)
    throw ConfigError("stability margin must be in (0, 1)");
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::GradientTolerance: return "gradient-tolerance";
    case StopReason::MaxIterations: return "max-iterations";
    case StopReason::StepUnstable: return "step-unstable";
  }
  return "unknown";
}

const Matrix& OptimizerTrace::final_policy() const {
  if (iterates.empty()) throw Error("trace does not retain iterates");
  return iterates.back();
}

OptimizerTrace run_optimizer(const Matrix& g0, const OptimizerConfig& cfg,
                             const DataMatrices& data, const GeneralizedCost& cost) {
  cfg.validate();
  try {
    require_feasible(g0, data, cfg.stability_margin);
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(std::string("infeasible starting policy: ") + e.what(),
                          e.residual());
  }

  // Plain-cost companion solve only needed when the objective is regularized.
  const GeneralizedCost* plain_ptr = nullptr;
  std::optional<GeneralizedCost> plain;
  if (!cost.reg().is_plain()) {
    plain.emplace(data, cost.q(), cost.r());
    plain_ptr = &*plain;
  }

  OptimizerTrace trace;
  trace.reg = cost.reg();
  trace.records.reserve(static_cast<std::size_t>(cfg.max_iter) + 1);

  Matrix g = g0;
  for (long k = 0;; ++k) {
    // evaluate() inside eval_iterate re-certifies feasibility of every iterate.
    IterateEval it = eval_iterate(g, data, cost, plain_ptr, cfg.stability_margin);
    const double pg_norm = it.proj_grad.norm();
    const double ns_norm = (data.pi_d_minus().mat() * g).norm();
    trace.records.push_back(TraceRecord{k, it.cost, it.cost_plain, pg_norm, ns_norm, 0.0});
    if (cfg.record_iterates) trace.iterates.push_back(g);

    if (pg_norm <= cfg.grad_tol) {
      trace.stop = StopReason::GradientTolerance;
      trace.stop_iteration = k;
      return trace;
    }
    if (k >= cfg.max_iter) {
      trace.stop = StopReason::MaxIterations;
      trace.stop_iteration = k;
      return trace;
    }

    double eta = cfg.eta;
    Matrix next;
    if (!cfg.line_search) {
      next = g - eta * it.proj_grad;
      const double rho = linalg::spectral_radius(data.x_plus() * next);
      if (rho >= 1.0 - cfg.stability_margin) {
        trace.stop = StopReason::StepUnstable;
        trace.stop_iteration = k;
        trace.stop_spectral_radius = rho;
        return trace;
      }
    } else {
      // Backtracking: halve until the trial iterate is stable and decreases
      // the objective by at least armijo * eta * ||proj grad||^2.
      const double pg_sq = pg_norm * pg_norm;
      bool accepted = false;
      for (int halvings = 0; halvings < 60; ++halvings) {
        next = g - eta * it.proj_grad;
        const double rho = linalg::spectral_radius(data.x_plus() * next);
        if (rho < 1.0 - cfg.stability_margin) {
          const double trial =
              unconstrained_cost(next, data, cost, cfg.stability_margin);
          if (trial <= it.cost - cfg.armijo * eta * pg_sq) {
            accepted = true;
            break;
          }
        }
        eta /= 2.0;
      }
      if (!accepted) {
        trace.stop = StopReason::StepUnstable;
        trace.stop_iteration = k;
        trace.stop_spectral_radius = linalg::spectral_radius(data.x_plus() * next);
        return trace;
      }
    }
    trace.records.back().eta = eta;
    g = std::move(next);
  }
}

OptimizerTrace run_deepo(const Matrix& g0, const OptimizerConfig& cfg,
                         const DataMatrices& data, const SymMatrix& q, const SymMatrix& r) {
  return run_optimizer(g0, cfg, data, GeneralizedCost(data, q, r));
}

OptimizerTrace run_regularized(const Matrix& g0, const OptimizerConfig& cfg,
                               const DataMatrices& data, const GeneralizedCost& cost) {
  return run_optimizer(g0, cfg, data, cost);
}

NullspaceAudit implicit_regularization_audit(const OptimizerTrace& trace,
                                             const DataMatrices& data) {
  if (trace.iterates.empty()) throw Error("audit needs a trace with retained iterates");
  NullspaceAudit audit;
  audit.norms.reserve(trace.iterates.size());
  for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
    const double norm = (data.pi_d_minus().mat() * trace.iterates[i]).norm();
    audit.norms.push_back(norm);
    if (norm > audit.max_norm) {
      audit.max_norm = norm;
      audit.argmax = static_cast<long>(i);
    }
  }
  return audit;
}

double orthogonality_residual(const Matrix& g, const DataMatrices& data,
                              const GeneralizedCost& cost) {
  const Matrix grad = gradient(g, data, cost);
  return (data.pi_d_minus().mat() * (data.pi_x_minus().mat() * grad)).norm();
}

double orthogonality_residual(const Matrix& g, const DataMatrices& data, const SymMatrix& q,
                              const SymMatrix& r) {
  return orthogonality_residual(g, data, GeneralizedCost(data, q, r));
}

namespace {

void append_number(std::string& line, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  line += buf;
}

}  // namespace

void write_trace_csv(const OptimizerTrace& trace, std::ostream& os,
                     std::optional<double> reference_cost) {
  const bool regularized = !trace.reg.is_plain();
  os << "k,cost,proj_grad_norm,nullspace_norm,eta";
  if (regularized) os << ",lambda,gamma,reg_cost";
  if (reference_cost) os << ",rel_err";
  os << "\n";
  for (const TraceRecord& rec : trace.records) {
    std::string line = std::to_string(rec.k);
    line += ',';
    append_number(line, rec.cost_plain);
    line += ',';
    append_number(line, rec.proj_grad_norm);
    line += ',';
    append_number(line, rec.nullspace_norm);
    line += ',';
    append_number(line, rec.eta);
    if (regularized) {
      line += ',';
      append_number(line, trace.reg.lambda_ce);
      line += ',';
      append_number(line, trace.reg.gamma_rob);
      line += ',';
      append_number(line, rec.cost);
    }
    if (reference_cost) {
      line += ',';
      append_number(line, (rec.cost - *reference_cost) / *reference_cost);
    }
    os << line << "\n";
  }
}

void write_trace_csv(const OptimizerTrace& trace, const std::filesystem::path& path,
                     std::optional<double> reference_cost) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_trace_csv(trace, os, reference_cost);
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace deepo
