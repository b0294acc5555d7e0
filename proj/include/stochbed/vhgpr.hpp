#pragma once

#include <Eigen/Cholesky>
#include <iosfwd>

#include "stochbed/kernel.hpp"
#include "stochbed/types.hpp"

namespace stochbed {

/// Heteroscedastic GP hyperparameters: y = f(x) + N(0, exp(g(x))),
/// f ~ GP(0, k_f), g ~ GP(mu0, k_g).
struct VhgprHyper {
  double mu0 = 0.0;
  KernelParams kernel_f;
  KernelParams kernel_g;
};

/// The variational posterior over g at the training points is
/// N(mu, Sigma), both determined by the diagonal parameter Lambda:
/// mu = K_g (Lambda - I/2) 1 + mu0 1, Sigma = (K_g^{-1} + Lambda)^{-1}.
/// Sigma is computed through B = K_g + Lambda^{-1}, never through
/// K_g^{-1} alone.
void variational_moments(const Vector& lambda, const Matrix& Kg, double mu0,
                         Vector& mu, Matrix& Sigma);

struct ElboGradients {
  Vector log_lambda;
  Vector log_kernel_f;  // [log amplitude, log lengthscales...]
  Vector log_kernel_g;
  double mu0 = 0.0;
};

/// Marginalized evidence lower bound
///   L = log N(y; 0, K_f + Z) - tr(Sigma)/4 - KL(N(mu,Sigma) || N(mu0 1, K_g))
/// with Z = diag(exp(mu_i - Sigma_ii/2)) and (mu, Sigma) from
/// variational_moments. Gradients are analytic.
double elbo(const Dataset& d, const Vector& lambda, const VhgprHyper& h,
            ElboGradients* grad = nullptr);

/// Same bound evaluated at free (mu, Sigma) not tied to any Lambda.
/// Exposed so tests can probe stationarity of the closed form.
double elbo_free(const Dataset& d, const Vector& mu, const Matrix& Sigma,
                 const VhgprHyper& h);

struct TrainedVhgpr {
  Dataset data;
  VhgprHyper hyper;
  Vector lambda;
  Vector mu;     // variational mean of g at training inputs
  Matrix Sigma;  // variational covariance of g
  Vector z;      // diag of Z

  Eigen::LLT<Matrix> chol_C;  // K_f + Z
  Vector alpha;               // (K_f + Z)^{-1} y
  Eigen::LLT<Matrix> chol_B;  // K_g + Lambda^{-1}
  Vector s;                   // lambda - 1/2

  double elbo_value = 0.0;
  bool converged = true;
};

/// Joint gradient ascent of the bound over (log Lambda, log kernel
/// parameters, mu0). Requires n >= 5. Non-convergence returns
/// best-so-far with converged=false.
TrainedVhgpr vhgpr_fit(const Dataset& d, const VhgprHyper& init,
                       const Vector& lambda_init, uint64_t seed);

/// Cold start: kernel scales from data ranges, mu0 from the residual
/// variance of a quick constant-noise GP fit, Lambda = I/2.
TrainedVhgpr vhgpr_fit(const Dataset& d, uint64_t seed);

/// Warm start from a previous fit on a prefix of d's rows; new rows get
/// Lambda entries of 1/2.
TrainedVhgpr vhgpr_refit(const TrainedVhgpr& prev, const Dataset& d,
                         uint64_t seed);

/// Lambda-only optimization at fixed hyperparameters: quasi-Newton ascent
/// followed by damped fixed-point iteration on the stationarity condition,
/// so mu and Sigma from the result sit at the bound's stationary point.
Vector vhgpr_optimize_lambda(const Dataset& d, const VhgprHyper& h,
                             const Vector& lambda0, double tol = 1e-12);

void vhgpr_predict(const TrainedVhgpr& m, const Matrix& X, Vector& mu_f,
                   Vector& var_f, Vector& mu_g, Vector& var_g);
PointPosterior vhgpr_predict(const TrainedVhgpr& m, const Vector& x);

/// Posterior covariance matrices of f and of g over the rows of X, for
/// drawing whole curves from the surrogate.
void vhgpr_posterior_cov(const TrainedVhgpr& m, const Matrix& X, Matrix& cov_f,
                         Matrix& cov_g);

/// Versioned JSON round-trip (dataset, hyperparameters, Lambda, flag).
void vhgpr_save(const TrainedVhgpr& m, std::ostream& out);
TrainedVhgpr vhgpr_load(std::istream& in);

}  // namespace stochbed
