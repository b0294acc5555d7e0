#pragma once

#include <Eigen/Cholesky>

#include "stochbed/kernel.hpp"
#include "stochbed/types.hpp"

namespace stochbed {

/// Standard GP regression hyperparameters: RBF kernel plus a constant
/// observation noise standard deviation.
struct SgprHyper {
  KernelParams kernel;
  double noise_sd = 0.1;
};

struct SgprModel {
  Dataset data;
  SgprHyper hyper;
  Eigen::LLT<Matrix> chol;  // factor of K + noise_sd^2 I (jittered)
  Vector alpha;             // (K + noise_sd^2 I)^{-1} y
  double log_marginal = 0.0;
  bool converged = true;
};

/// Log marginal likelihood log N(y; 0, K + noise_sd^2 I). When grad is
/// non-null it receives the analytic gradient with respect to
/// [log amplitude, log lengthscale_1.., log noise_sd].
double sgpr_log_marginal(const Dataset& d, const SgprHyper& h,
                         Vector* grad = nullptr);

/// Maximizes the log marginal over log-hyperparameters in [-6, 6] by
/// L-BFGS with 3 restarts from perturbations of init. Non-convergence
/// returns best-so-far with converged=false.
SgprModel sgpr_fit(const Dataset& d, const SgprHyper& init, uint64_t seed);

/// Same, with the initial hyperparameters derived from data scales.
SgprModel sgpr_fit(const Dataset& d, uint64_t seed);

SgprHyper sgpr_default_init(const Dataset& d);

void sgpr_predict(const SgprModel& m, const Matrix& X, Vector& mean,
                  Vector& var);
std::pair<double, double> sgpr_predict(const SgprModel& m, const Vector& x);

}  // namespace stochbed
