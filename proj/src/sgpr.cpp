#include "stochbed/sgpr.hpp"

#include <cmath>

#include "stochbed/linalg.hpp"
#include "stochbed/optimize.hpp"
#include "stochbed/rng.hpp"

namespace stochbed {
namespace {

// Pack/unpack hyperparameters as [log tau, log l_1.., log gamma0].
Vector pack(const SgprHyper& h) {
  const Index d = h.kernel.lengthscales.size();
  Vector v(d + 2);
  v[0] = std::log(h.kernel.amplitude);
  v.segment(1, d) = h.kernel.lengthscales.array().log();
  v[d + 1] = std::log(std::max(h.noise_sd, 1e-300));
  return v;
}

SgprHyper unpack(const Vector& v) {
  const Index d = v.size() - 2;
  SgprHyper h;
  h.kernel.amplitude = std::exp(v[0]);
  h.kernel.lengthscales = v.segment(1, d).array().exp().matrix();
  h.noise_sd = std::exp(v[d + 1]);
  return h;
}

}  // namespace

double sgpr_log_marginal(const Dataset& d, const SgprHyper& h, Vector* grad) {
  check_dataset(d);
  check_kernel_params(h.kernel);
  if (h.noise_sd < 0.0)
    throw std::invalid_argument("sgpr_log_marginal: noise_sd must be >= 0");
  const Index n = d.size();
  const double tau2 = h.kernel.amplitude * h.kernel.amplitude;
  const double g2 = h.noise_sd * h.noise_sd;

  Matrix K = kernel_matrix(d.inputs, h.kernel);
  Matrix C = K;
  C.diagonal().array() += g2;
  auto llt = jittered_llt(C, tau2);
  Vector alpha = llt.solve(d.outputs);

  const double value = -0.5 * d.outputs.dot(alpha) - 0.5 * llt_log_det(llt) -
                       0.5 * n * std::log(2.0 * M_PI);

  if (grad) {
    const Index dim = d.dim();
    grad->resize(dim + 2);
    // dL/dtheta = 1/2 tr((alpha alpha^T - C^{-1}) dC/dtheta); W is symmetric
    // so the trace is an elementwise product sum.
    Matrix W = alpha * alpha.transpose();
    W -= llt.solve(Matrix::Identity(n, n));
    (*grad)[0] = W.cwiseProduct(K).sum();  // dK/dlog tau = 2K, times 1/2
    for (Index j = 0; j < dim; ++j) {
      const double lj = h.kernel.lengthscales[j];
      Vector c = d.inputs.col(j);
      Matrix D = (c.replicate(1, n) - c.transpose().replicate(n, 1)) / lj;
      (*grad)[1 + j] = 0.5 * W.cwiseProduct(K.cwiseProduct(D.cwiseAbs2())).sum();
    }
    (*grad)[dim + 1] = g2 * W.trace();  // dC/dlog gamma0 = 2 gamma0^2 I
  }
  return value;
}

SgprHyper sgpr_default_init(const Dataset& d) {
  SgprHyper h;
  const double sd_y = std::sqrt(
      (d.outputs.array() - d.outputs.mean()).square().sum() /
      std::max<Index>(1, d.size() - 1));
  h.kernel.amplitude = std::max(sd_y, 1e-2);
  h.kernel.lengthscales.resize(d.dim());
  for (Index j = 0; j < d.dim(); ++j) {
    const double range =
        d.inputs.col(j).maxCoeff() - d.inputs.col(j).minCoeff();
    h.kernel.lengthscales[j] = std::max(0.25 * range, 1e-2);
  }
  h.noise_sd = std::max(0.1 * sd_y, 1e-2);
  return h;
}

SgprModel sgpr_fit(const Dataset& d, const SgprHyper& init, uint64_t seed) {
  check_dataset(d);
  if (d.size() < 2) throw std::invalid_argument("sgpr_fit: need n >= 2");

  const Index np = d.dim() + 2;
  const Vector lo = Vector::Constant(np, -6.0);
  const Vector hi = Vector::Constant(np, 6.0);
  Objective obj = [&](const Vector& v, Vector& g) {
    return sgpr_log_marginal(d, unpack(v), &g);
  };

  Vector v0 = pack(init).array().max(lo.array()).min(hi.array());
  Rng rng(derive_seed(seed, "sgpr-restarts"));
  OptimizeResult best;
  best.value = -std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < 3; ++restart) {
    Vector v = v0;
    if (restart > 0)
      for (Index i = 0; i < np; ++i) v[i] += 2.0 * rng.uniform() - 1.0;
    OptimizeResult r;
    try {
      r = maximize_box(obj, v, lo, hi);
    } catch (const ConditioningError&) {
      continue;  // pathological start; the other restarts cover it
    }
    if (r.value > best.value) best = r;
  }
  if (!std::isfinite(best.value))
    throw ConditioningError("sgpr_fit: every restart failed to factorize");

  SgprModel m;
  m.data = d;
  m.hyper = unpack(best.x);
  m.converged = best.converged;
  m.log_marginal = best.value;
  const double tau2 = m.hyper.kernel.amplitude * m.hyper.kernel.amplitude;
  Matrix C = kernel_matrix(d.inputs, m.hyper.kernel);
  C.diagonal().array() += m.hyper.noise_sd * m.hyper.noise_sd;
  m.chol = jittered_llt(C, tau2);
  m.alpha = m.chol.solve(d.outputs);
  return m;
}

SgprModel sgpr_fit(const Dataset& d, uint64_t seed) {
  return sgpr_fit(d, sgpr_default_init(d), seed);
}

void sgpr_predict(const SgprModel& m, const Matrix& X, Vector& mean,
                  Vector& var) {
  if (X.cols() != m.data.dim())
    throw std::invalid_argument("sgpr_predict: dimension mismatch");
  Matrix Ks = kernel_matrix(m.data.inputs, X, m.hyper.kernel);  // n x q
  mean = Ks.transpose() * m.alpha;
  // var_i = k(x,x) - k_i^T C^{-1} k_i with one triangular solve for all i.
  Matrix V = m.chol.matrixL().solve(Ks);
  const double tau2 = m.hyper.kernel.amplitude * m.hyper.kernel.amplitude;
  var =
      (tau2 - V.colwise().squaredNorm().transpose().array()).max(0.0).matrix();
}

std::pair<double, double> sgpr_predict(const SgprModel& m, const Vector& x) {
  Vector mean, var;
  sgpr_predict(m, Matrix(x.transpose()), mean, var);
  return {mean[0], var[0]};
}

}  // namespace stochbed
