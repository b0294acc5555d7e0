#include "stochbed/vhgpr.hpp"

#include <json.hpp>

#include <cmath>
#include <istream>
#include <ostream>

#include "stochbed/linalg.hpp"
#include "stochbed/optimize.hpp"
#include "stochbed/rng.hpp"
#include "stochbed/sgpr.hpp"

namespace stochbed {
namespace {

constexpr double kLogBound = 6.0;
constexpr double kMu0Bound = 30.0;

// Per-dimension squared coordinate differences; fixed across optimizer
// steps, so computed once per fit.
std::vector<Matrix> squared_coord_diffs(const Matrix& X) {
  const Index n = X.rows();
  std::vector<Matrix> out;
  out.reserve(static_cast<size_t>(X.cols()));
  for (Index j = 0; j < X.cols(); ++j) {
    Vector c = X.col(j);
    Matrix D = c.replicate(1, n) - c.transpose().replicate(n, 1);
    out.push_back(D.cwiseAbs2());
  }
  return out;
}

Matrix kernel_from_sqdist(const std::vector<Matrix>& sq,
                          const KernelParams& p) {
  const Index n = sq[0].rows();
  Matrix E = Matrix::Zero(n, n);
  for (size_t j = 0; j < sq.size(); ++j) {
    const double lj = p.lengthscales[static_cast<Index>(j)];
    E += sq[j] / (lj * lj);
  }
  Matrix K = (p.amplitude * p.amplitude) * (-0.5 * E.array()).exp().matrix();
  K.diagonal().setConstant(p.amplitude * p.amplitude);
  return K;
}

struct ElboEval {
  double value = 0.0;
  Matrix Kf, Kg;
  Eigen::LLT<Matrix> cholB, cholC;
  Matrix Binv, Cinv;
  Matrix Sigma;
  Vector s, mu, z, alpha, u, b;
};

ElboEval evaluate(const Dataset& d, const Vector& lambda, const VhgprHyper& h,
                  const std::vector<Matrix>& sq, bool want_grad_parts) {
  const Index n = d.size();
  const double tf2 = h.kernel_f.amplitude * h.kernel_f.amplitude;
  const double tg2 = h.kernel_g.amplitude * h.kernel_g.amplitude;

  ElboEval e;
  e.Kf = kernel_from_sqdist(sq, h.kernel_f);
  e.Kg = kernel_from_sqdist(sq, h.kernel_g);
  e.s = lambda.array() - 0.5;

  Matrix B = e.Kg;
  Vector li = lambda.cwiseInverse();
  B.diagonal() += li;
  e.cholB = jittered_llt(B, tg2);
  e.Binv = e.cholB.solve(Matrix::Identity(n, n));
  e.Sigma = -(li.asDiagonal() * e.Binv * li.asDiagonal());
  e.Sigma.diagonal() += li;

  e.mu = e.Kg * e.s;
  e.mu.array() += h.mu0;
  // Exponent clamp keeps pathological optimizer probes finite; sane fits
  // never reach it.
  e.z = (e.mu - 0.5 * e.Sigma.diagonal())
            .array().min(600.0).max(-600.0).exp().matrix();

  Matrix C = e.Kf;
  C.diagonal() += e.z;
  e.cholC = jittered_llt(C, tf2);
  e.alpha = e.cholC.solve(d.outputs);

  double L = -0.5 * d.outputs.dot(e.alpha) - 0.5 * llt_log_det(e.cholC) -
             0.5 * n * std::log(2.0 * M_PI);
  L -= 0.25 * e.Sigma.trace();
  // KL(N(mu,Sigma) || N(mu0 1, K_g)) reduced through B:
  //   KL = [s'K_g s - tr(Lambda Sigma) + logdet B + sum log lambda]/2.
  const double tr_ls = (lambda.array() * e.Sigma.diagonal().array()).sum();
  L -= 0.5 * (e.s.dot(e.Kg * e.s) - tr_ls + llt_log_det(e.cholB) +
              lambda.array().log().sum());
  e.value = L;

  if (want_grad_parts) {
    e.Cinv = e.cholC.solve(Matrix::Identity(n, n));
    Vector dv = 0.5 * (e.alpha.cwiseAbs2() - e.Cinv.diagonal());
    e.u = dv.cwiseProduct(e.z);
    e.b = e.Binv.diagonal();
  }
  return e;
}

ElboGradients assemble_gradients(const Dataset& d, const Vector& lambda,
                                 const VhgprHyper& h,
                                 const std::vector<Matrix>& sq,
                                 const ElboEval& e) {
  const Index dim = d.dim();
  ElboGradients g;

  Matrix P = e.Sigma.cwiseAbs2();
  Vector grad_lambda = e.Kg * (e.u - e.s) + 0.5 * (P * (e.u - lambda)) +
                       0.25 * P.rowwise().sum() + 0.5 * e.Sigma.diagonal() +
                       0.5 * (e.b.array() / lambda.array().square()).matrix() -
                       0.5 * lambda.cwiseInverse();
  g.log_lambda = grad_lambda.cwiseProduct(lambda);
  g.mu0 = e.u.sum();

  Matrix Wf = e.alpha * e.alpha.transpose() - e.Cinv;
  g.log_kernel_f.resize(1 + dim);
  g.log_kernel_f[0] = Wf.cwiseProduct(e.Kf).sum();
  for (Index j = 0; j < dim; ++j) {
    const double lj = h.kernel_f.lengthscales[j];
    g.log_kernel_f[1 + j] =
        0.5 * Wf.cwiseProduct(e.Kf.cwiseProduct(sq[static_cast<size_t>(j)]))
                  .sum() /
        (lj * lj);
  }

  // dL/dK_g as a symmetric matrix; see the u = d.z, s = lambda - 1/2
  // notation above. Middle term collapses B^{-1} Lambda^{-1} diag(w)
  // Lambda^{-1} B^{-1}.
  Vector w = (((0.5 * lambda - 0.5 * e.u).array() - 0.25) /
              lambda.array().square()).matrix();
  Matrix Ghat = 0.5 * (e.s * e.u.transpose() + e.u * e.s.transpose()) +
                e.Binv * w.asDiagonal() * e.Binv -
                0.5 * (e.s * e.s.transpose()) - 0.5 * e.Binv;
  g.log_kernel_g.resize(1 + dim);
  g.log_kernel_g[0] = 2.0 * Ghat.cwiseProduct(e.Kg).sum();
  for (Index j = 0; j < dim; ++j) {
    const double lj = h.kernel_g.lengthscales[j];
    g.log_kernel_g[1 + j] =
        Ghat.cwiseProduct(e.Kg.cwiseProduct(sq[static_cast<size_t>(j)]))
            .sum() /
        (lj * lj);
  }
  return g;
}

// Parameter vector layout:
// [log lambda (n) | log tau_f, log l_f (d) | log tau_g, log l_g (d) | mu0].
Vector pack_params(const Vector& lambda, const VhgprHyper& h) {
  const Index n = lambda.size();
  const Index dim = h.kernel_f.lengthscales.size();
  Vector v(n + 2 * (1 + dim) + 1);
  v.head(n) = lambda.array().log();
  v[n] = std::log(h.kernel_f.amplitude);
  v.segment(n + 1, dim) = h.kernel_f.lengthscales.array().log();
  v[n + 1 + dim] = std::log(h.kernel_g.amplitude);
  v.segment(n + 2 + dim, dim) = h.kernel_g.lengthscales.array().log();
  v[v.size() - 1] = h.mu0;
  return v;
}

void unpack_params(const Vector& v, Index n, Index dim, Vector& lambda,
                   VhgprHyper& h) {
  lambda = v.head(n).array().exp().matrix();
  h.kernel_f.amplitude = std::exp(v[n]);
  h.kernel_f.lengthscales = v.segment(n + 1, dim).array().exp().matrix();
  h.kernel_g.amplitude = std::exp(v[n + 1 + dim]);
  h.kernel_g.lengthscales = v.segment(n + 2 + dim, dim).array().exp().matrix();
  h.mu0 = v[v.size() - 1];
}

Vector lambda_gradient(const ElboEval& e, const Vector& lambda) {
  Matrix P = e.Sigma.cwiseAbs2();
  return e.Kg * (e.u - e.s) + 0.5 * (P * (e.u - lambda)) +
         0.25 * P.rowwise().sum() + 0.5 * e.Sigma.diagonal() +
         0.5 * (e.b.array() / lambda.array().square()).matrix() -
         0.5 * lambda.cwiseInverse();
}

// Quasi-Newton ascent over log lambda at fixed hyperparameters, then a
// damped fixed-point pass on lambda = 1/2 + u. prefer_stationary keeps
// the converged fixed point; otherwise the best bound seen wins.
// Damped Newton on the stationarity residual F(lambda) = u(lambda) + 1/2 -
// lambda with a finite-difference Jacobian. Reserved for small n: each
// Jacobian costs n bound evaluations.
Vector newton_stationary(const Dataset& d, const VhgprHyper& h, Vector lambda,
                         const std::vector<Matrix>& sq, double tol) {
  const Index n = lambda.size();
  const double floor = std::exp(-kLogBound), cap = std::exp(kLogBound);
  auto resid = [&](const Vector& lam) -> Vector {
    ElboEval e = evaluate(d, lam, h, sq, true);
    return (e.u.array() + 0.5 - lam.array()).matrix();
  };
  Vector F = resid(lambda);
  double fn = F.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < 60 && fn >= tol; ++it) {
    Matrix J(n, n);
    for (Index j = 0; j < n; ++j) {
      const double step = std::max(1e-7 * lambda[j], 1e-10);
      Vector lp = lambda, lm = lambda;
      lp[j] += step;
      lm[j] = std::max(lm[j] - step, 0.5 * floor);
      J.col(j) = (resid(lp) - resid(lm)) / (lp[j] - lm[j]);
    }
    Vector delta = J.fullPivLu().solve(-F);
    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      Vector cand = (lambda + t * delta).cwiseMax(floor).cwiseMin(cap);
      try {
        Vector Fc = resid(cand);
        const double fc = Fc.lpNorm<Eigen::Infinity>();
        if (fc < fn) {
          lambda = cand;
          F = Fc;
          fn = fc;
          accepted = true;
          break;
        }
      } catch (const ConditioningError&) {
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  return lambda;
}

Vector optimize_lambda_impl(const Dataset& d, const VhgprHyper& h,
                            const Vector& lambda0,
                            const std::vector<Matrix>& sq, double tol,
                            bool prefer_stationary) {
  const Index n = d.size();
  Objective obj = [&](const Vector& v, Vector& grad) -> double {
    Vector lambda = v.array().exp().matrix();
    try {
      ElboEval e = evaluate(d, lambda, h, sq, true);
      grad = lambda_gradient(e, lambda).cwiseProduct(lambda);
      return e.value;
    } catch (const ConditioningError&) {
      grad = Vector::Zero(n);
      return -std::numeric_limits<double>::infinity();
    }
  };
  OptimizeOptions opts;
  opts.max_iter = 500;
  opts.rel_tol = 1e-12;
  opts.grad_tol = 1e-11;
  OptimizeResult r =
      maximize_box(obj, lambda0.array().log().matrix(),
                   Vector::Constant(n, -kLogBound),
                   Vector::Constant(n, kLogBound), opts);

  Vector lambda = r.x.array().exp().matrix();
  Vector best_lambda = lambda;
  double best = r.value;
  const double floor = std::exp(-kLogBound), cap = std::exp(kLogBound);
  for (int it = 0; it < 300; ++it) {
    ElboEval e = evaluate(d, lambda, h, sq, true);
    if (e.value >= best) {
      best = e.value;
      best_lambda = lambda;
    }
    Vector target =
        (0.5 + e.u.array()).cwiseMax(floor).cwiseMin(cap).matrix();
    const double resid = (target - lambda).lpNorm<Eigen::Infinity>();
    if (resid < tol) break;
    lambda = 0.3 * lambda + 0.7 * target;
  }
  if (!prefer_stationary) return best_lambda;
  try {
    return newton_stationary(d, h, lambda, sq, tol);
  } catch (const ConditioningError&) {
    return newton_stationary(d, h, best_lambda, sq, tol);
  }
}

TrainedVhgpr finalize_model(const Dataset& d, const Vector& lambda,
                            const VhgprHyper& h,
                            const std::vector<Matrix>& sq, double elbo_value,
                            bool converged) {
  ElboEval e = evaluate(d, lambda, h, sq, false);
  TrainedVhgpr m;
  m.data = d;
  m.hyper = h;
  m.lambda = lambda;
  m.mu = e.mu;
  m.Sigma = e.Sigma;
  m.z = e.z;
  m.chol_C = e.cholC;
  m.alpha = e.alpha;
  m.chol_B = e.cholB;
  m.s = e.s;
  m.elbo_value = elbo_value;
  m.converged = converged;
  return m;
}

}  // namespace

void variational_moments(const Vector& lambda, const Matrix& Kg, double mu0,
                         Vector& mu, Matrix& Sigma) {
  const Index n = lambda.size();
  if (Kg.rows() != n || Kg.cols() != n)
    throw std::invalid_argument("variational_moments: size mismatch");
  if (!(lambda.array() > 0.0).all())
    throw std::invalid_argument("variational_moments: lambda must be > 0");
  Vector s = lambda.array() - 0.5;
  mu = Kg * s;
  mu.array() += mu0;
  Matrix B = Kg;
  Vector li = lambda.cwiseInverse();
  B.diagonal() += li;
  auto llt = jittered_llt(B, Kg.diagonal().maxCoeff());
  Matrix Binv = llt.solve(Matrix::Identity(n, n));
  Sigma = -(li.asDiagonal() * Binv * li.asDiagonal());
  Sigma.diagonal() += li;
}

double elbo(const Dataset& d, const Vector& lambda, const VhgprHyper& h,
            ElboGradients* grad) {
  check_dataset(d);
  check_kernel_params(h.kernel_f);
  check_kernel_params(h.kernel_g);
  if (lambda.size() != d.size() || !(lambda.array() > 0.0).all())
    throw std::invalid_argument("elbo: lambda must be positive, one per row");
  auto sq = squared_coord_diffs(d.inputs);
  ElboEval e = evaluate(d, lambda, h, sq, grad != nullptr);
  if (grad) *grad = assemble_gradients(d, lambda, h, sq, e);
  return e.value;
}

double elbo_free(const Dataset& d, const Vector& mu, const Matrix& Sigma,
                 const VhgprHyper& h) {
  check_dataset(d);
  const Index n = d.size();
  if (mu.size() != n || Sigma.rows() != n || Sigma.cols() != n)
    throw std::invalid_argument("elbo_free: size mismatch");
  const double tf2 = h.kernel_f.amplitude * h.kernel_f.amplitude;
  const double tg2 = h.kernel_g.amplitude * h.kernel_g.amplitude;

  Matrix Kf = kernel_matrix(d.inputs, h.kernel_f);
  Matrix Kg = kernel_matrix(d.inputs, h.kernel_g);
  Vector z = (mu - 0.5 * Sigma.diagonal()).array().exp();
  Matrix C = Kf;
  C.diagonal() += z;
  auto cholC = jittered_llt(C, tf2);
  Vector alpha = cholC.solve(d.outputs);

  double L = -0.5 * d.outputs.dot(alpha) - 0.5 * llt_log_det(cholC) -
             0.5 * n * std::log(2.0 * M_PI);
  L -= 0.25 * Sigma.trace();

  auto cholKg = jittered_llt(Kg, tg2);
  auto cholS = jittered_llt(Sigma, Sigma.diagonal().maxCoeff());
  Vector dm = mu.array() - h.mu0;
  const double kl = 0.5 * (cholKg.solve(Sigma).trace() +
                           dm.dot(cholKg.solve(dm)) - n +
                           llt_log_det(cholKg) - llt_log_det(cholS));
  return L - kl;
}

TrainedVhgpr vhgpr_fit(const Dataset& d, const VhgprHyper& init,
                       const Vector& lambda_init, uint64_t /*seed*/) {
  check_dataset(d);
  if (d.size() < 5) throw std::invalid_argument("vhgpr_fit: need n >= 5");
  check_kernel_params(init.kernel_f);
  check_kernel_params(init.kernel_g);
  if (lambda_init.size() != d.size() || !(lambda_init.array() > 0.0).all())
    throw std::invalid_argument("vhgpr_fit: bad lambda_init");

  const Index n = d.size();
  const Index dim = d.dim();
  auto sq = squared_coord_diffs(d.inputs);
  const Index np = n + 2 * (1 + dim) + 1;
  Vector lo = Vector::Constant(np, -kLogBound);
  Vector hi = Vector::Constant(np, kLogBound);
  lo[np - 1] = -kMu0Bound;
  hi[np - 1] = kMu0Bound;

  const double neg_inf = -std::numeric_limits<double>::infinity();
  Objective obj = [&](const Vector& v, Vector& grad) -> double {
    Vector lambda;
    VhgprHyper h;
    unpack_params(v, n, dim, lambda, h);
    try {
      ElboEval e = evaluate(d, lambda, h, sq, true);
      ElboGradients g = assemble_gradients(d, lambda, h, sq, e);
      grad.resize(np);
      grad.head(n) = g.log_lambda;
      grad.segment(n, 1 + dim) = g.log_kernel_f;
      grad.segment(n + 1 + dim, 1 + dim) = g.log_kernel_g;
      grad[np - 1] = g.mu0;
      return e.value;
    } catch (const ConditioningError&) {
      grad = Vector::Zero(np);
      return neg_inf;  // line search backtracks away
    }
  };

  // Alternation: joint ascent, lambda refinement at the fitted
  // hyperparameters, then a second joint pass from the refined state.
  OptimizeResult r;
  try {
    r = maximize_box(obj, pack_params(lambda_init, init), lo, hi);
    Vector lambda;
    VhgprHyper h;
    unpack_params(r.x, n, dim, lambda, h);
    lambda = optimize_lambda_impl(d, h, lambda, sq, 1e-10, false);
    r = maximize_box(obj, pack_params(lambda, h), lo, hi);
  } catch (const std::invalid_argument&) {
    throw ConditioningError("vhgpr_fit: bound not finite at the start point");
  }

  Vector lambda;
  VhgprHyper h;
  unpack_params(r.x, n, dim, lambda, h);
  return finalize_model(d, lambda, h, sq, r.value, r.converged);
}

TrainedVhgpr vhgpr_fit(const Dataset& d, uint64_t seed) {
  check_dataset(d);
  if (d.size() < 5) throw std::invalid_argument("vhgpr_fit: need n >= 5");
  SgprModel quick = sgpr_fit(d, derive_seed(seed, "vhgpr-init"));
  Vector mean, var;
  sgpr_predict(quick, d.inputs, mean, var);
  const double resid_var = std::max(
      (d.outputs - mean).squaredNorm() / static_cast<double>(d.size()), 1e-6);

  VhgprHyper h;
  h.mu0 = std::clamp(std::log(resid_var), -kMu0Bound, kMu0Bound);
  h.kernel_f = sgpr_default_init(d).kernel;
  h.kernel_g = h.kernel_f;
  return vhgpr_fit(d, h, Vector::Constant(d.size(), 0.5), seed);
}

TrainedVhgpr vhgpr_refit(const TrainedVhgpr& prev, const Dataset& d,
                         uint64_t seed) {
  if (d.size() < prev.data.size())
    throw std::invalid_argument("vhgpr_refit: dataset shrank");
  Vector lambda = Vector::Constant(d.size(), 0.5);
  lambda.head(prev.lambda.size()) = prev.lambda;
  return vhgpr_fit(d, prev.hyper, lambda, seed);
}

Vector vhgpr_optimize_lambda(const Dataset& d, const VhgprHyper& h,
                             const Vector& lambda0, double tol) {
  check_dataset(d);
  check_kernel_params(h.kernel_f);
  check_kernel_params(h.kernel_g);
  if (lambda0.size() != d.size() || !(lambda0.array() > 0.0).all())
    throw std::invalid_argument("vhgpr_optimize_lambda: bad lambda0");
  auto sq = squared_coord_diffs(d.inputs);
  return optimize_lambda_impl(d, h, lambda0, sq, tol, true);
}

void vhgpr_predict(const TrainedVhgpr& m, const Matrix& X, Vector& mu_f,
                   Vector& var_f, Vector& mu_g, Vector& var_g) {
  if (X.cols() != m.data.dim())
    throw std::invalid_argument("vhgpr_predict: dimension mismatch");
  const double tf2 = m.hyper.kernel_f.amplitude * m.hyper.kernel_f.amplitude;
  const double tg2 = m.hyper.kernel_g.amplitude * m.hyper.kernel_g.amplitude;

  Matrix Ksf = kernel_matrix(m.data.inputs, X, m.hyper.kernel_f);
  mu_f = Ksf.transpose() * m.alpha;
  Matrix Vf = m.chol_C.matrixL().solve(Ksf);
  var_f =
      (tf2 - Vf.colwise().squaredNorm().transpose().array()).max(0.0).matrix();

  Matrix Ksg = kernel_matrix(m.data.inputs, X, m.hyper.kernel_g);
  mu_g = Ksg.transpose() * m.s;
  mu_g.array() += m.hyper.mu0;
  Matrix Vg = m.chol_B.matrixL().solve(Ksg);
  var_g =
      (tg2 - Vg.colwise().squaredNorm().transpose().array()).max(0.0).matrix();
}

PointPosterior vhgpr_predict(const TrainedVhgpr& m, const Vector& x) {
  Vector mu_f, var_f, mu_g, var_g;
  vhgpr_predict(m, Matrix(x.transpose()), mu_f, var_f, mu_g, var_g);
  return {mu_f[0], var_f[0], mu_g[0], var_g[0]};
}

void vhgpr_posterior_cov(const TrainedVhgpr& m, const Matrix& X, Matrix& cov_f,
                         Matrix& cov_g) {
  if (X.cols() != m.data.dim())
    throw std::invalid_argument("vhgpr_posterior_cov: dimension mismatch");
  Matrix Ksf = kernel_matrix(m.data.inputs, X, m.hyper.kernel_f);
  Matrix Vf = m.chol_C.matrixL().solve(Ksf);
  cov_f = kernel_matrix(X, X, m.hyper.kernel_f) - Vf.transpose() * Vf;
  cov_f = 0.5 * (cov_f + cov_f.transpose()).eval();

  Matrix Ksg = kernel_matrix(m.data.inputs, X, m.hyper.kernel_g);
  Matrix Vg = m.chol_B.matrixL().solve(Ksg);
  cov_g = kernel_matrix(X, X, m.hyper.kernel_g) - Vg.transpose() * Vg;
  cov_g = 0.5 * (cov_g + cov_g.transpose()).eval();
}

void vhgpr_save(const TrainedVhgpr& m, std::ostream& out) {
  nlohmann::json j;
  j["format"] = "stochbed-vhgpr";
  j["version"] = 1;
  j["inputs"] = std::vector<std::vector<double>>();
  for (Index i = 0; i < m.data.size(); ++i) {
    std::vector<double> row(m.data.inputs.row(i).begin(),
                            m.data.inputs.row(i).end());
    j["inputs"].push_back(row);
  }
  j["outputs"] = std::vector<double>(m.data.outputs.begin(),
                                     m.data.outputs.end());
  j["mu0"] = m.hyper.mu0;
  j["kernel_f"] = {
      {"amplitude", m.hyper.kernel_f.amplitude},
      {"lengthscales", std::vector<double>(m.hyper.kernel_f.lengthscales.begin(),
                                           m.hyper.kernel_f.lengthscales.end())}};
  j["kernel_g"] = {
      {"amplitude", m.hyper.kernel_g.amplitude},
      {"lengthscales", std::vector<double>(m.hyper.kernel_g.lengthscales.begin(),
                                           m.hyper.kernel_g.lengthscales.end())}};
  j["lambda"] = std::vector<double>(m.lambda.begin(), m.lambda.end());
  j["elbo"] = m.elbo_value;
  j["converged"] = m.converged;
  out << j.dump(2) << "\n";
}

TrainedVhgpr vhgpr_load(std::istream& in) {
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "stochbed-vhgpr" || j.value("version", 0) != 1)
    throw std::invalid_argument("vhgpr_load: unrecognized artifact");
  const auto& rows = j.at("inputs");
  const Index n = static_cast<Index>(rows.size());
  if (n < 1) throw std::invalid_argument("vhgpr_load: empty dataset");
  const Index dim = static_cast<Index>(rows[0].size());
  Dataset d;
  d.inputs.resize(n, dim);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < dim; ++k)
      d.inputs(i, k) = rows[static_cast<size_t>(i)][static_cast<size_t>(k)];
  const auto& ys = j.at("outputs");
  d.outputs.resize(n);
  for (Index i = 0; i < n; ++i) d.outputs[i] = ys[static_cast<size_t>(i)];

  VhgprHyper h;
  h.mu0 = j.at("mu0");
  auto read_kernel = [](const nlohmann::json& jk) {
    KernelParams p;
    p.amplitude = jk.at("amplitude");
    const auto& ls = jk.at("lengthscales");
    p.lengthscales.resize(static_cast<Index>(ls.size()));
    for (Index k = 0; k < p.lengthscales.size(); ++k)
      p.lengthscales[k] = ls[static_cast<size_t>(k)];
    return p;
  };
  h.kernel_f = read_kernel(j.at("kernel_f"));
  h.kernel_g = read_kernel(j.at("kernel_g"));

  Vector lambda(n);
  const auto& ls = j.at("lambda");
  for (Index i = 0; i < n; ++i) lambda[i] = ls[static_cast<size_t>(i)];

  auto sq = squared_coord_diffs(d.inputs);
  return finalize_model(d, lambda, h, sq, j.at("elbo"), j.at("converged"));
}

}  // namespace stochbed
