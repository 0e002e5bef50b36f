#pragma once

#include "deepo/data.hpp"
#include "deepo/linalg.hpp"

namespace deepo {

using data::DataMatrices;
using linalg::Matrix;
using linalg::SymMatrix;
using linalg::Vector;

/// Regularizer weights. (0, 0) is the plain LQR objective.
struct Regularization {
  double lambda_ce = 0.0;  // certainty-equivalence weight (nullspace penalty)
  double gamma_rob = 0.0;  // robustness weight (covariance penalty)

  bool is_plain() const { return lambda_ce == 0.0 && gamma_rob == 0.0; }
  void validate() const;
};

/// Generalized quadratic objective Tr{(Q + G' R_eff G) Sigma_G} with
///   R_eff = U_-' R U_- + lambda Pi_{D_-} + gamma I_T.
/// Both regularizers are input-weight modifications, so one code path covers
/// the plain cost (lambda = gamma = 0) and the two regularized ones:
///   lambda term: lambda ||Pi_{D_-} G Sigma_G^{1/2}||_F^2
///   gamma term:  gamma Tr{G Sigma_G G'}
class GeneralizedCost {
 public:
  GeneralizedCost(const DataMatrices& data, SymMatrix q, SymMatrix r,
                  Regularization reg = {});

  const SymMatrix& r_eff() const { return r_eff_; }
  const SymMatrix& q() const { return q_; }
  const SymMatrix& r() const { return r_; }
  const Regularization& reg() const { return reg_; }
  double sigma_min_q() const { return sigma_min_q_; }

 private:
  SymMatrix q_;
  SymMatrix r_;
  SymMatrix r_eff_;
  Regularization reg_;
  double sigma_min_q_;
};

}  // namespace deepo
