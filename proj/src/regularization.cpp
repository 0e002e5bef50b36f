#include "deepo/regularization.hpp"

#include <sstream>

namespace deepo {

void Regularization::validate() const {
  if (lambda_ce < 0.0 || gamma_rob < 0.0)
    throw ConfigError("regularization weights must be nonnegative");
}

GeneralizedCost::GeneralizedCost(const DataMatrices& data, SymMatrix q, SymMatrix r,
                                 Regularization reg)
    : q_(std::move(q)), r_(std::move(r)), r_eff_(Matrix::Identity(1, 1)), reg_(reg) {
  reg_.validate();
  if (q_.dim() != data.state_dim()) throw DimensionError("Q must be n-by-n");
  if (r_.dim() != data.input_dim()) throw DimensionError("R must be m-by-m");

  sigma_min_q_ = q_.min_eigenvalue();
  // The smoothness bound divides by sigma_min(Q); reject degenerate penalties.
  if (sigma_min_q_ <= 1e-12 * std::max(1.0, q_.max_eigenvalue())) {
    std::ostringstream os;
    os << "Q must be positive definite, lambda_min = " << sigma_min_q_;
    throw NotPsdError(os.str(), sigma_min_q_);
  }
  const double r_min = r_.min_eigenvalue();
  if (r_min <= 0.0) throw NotPsdError("R must be positive definite", r_min);

  const Eigen::Index t = data.length();
  Matrix r_eff = data.u_minus().transpose() * r_.mat() * data.u_minus();
  if (reg_.lambda_ce != 0.0) r_eff += reg_.lambda_ce * data.pi_d_minus().mat();
  if (reg_.gamma_rob != 0.0) r_eff += reg_.gamma_rob * Matrix::Identity(t, t);
  r_eff_ = SymMatrix(r_eff);
}

}  // namespace deepo
