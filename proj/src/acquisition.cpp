#include "stochbed/acquisition.hpp"

#include <cmath>
#include <stdexcept>

#include "stochbed/design.hpp"

namespace stochbed {

double tail_prob(double f_val, double g_val, double delta) {
  // The guard keeps the f = delta case exact when exp(-g/2) overflows.
  if (f_val == delta) return 0.5;
  return normal_cdf((f_val - delta) * std::exp(-0.5 * g_val));
}

std::array<CubaturePoint, 4> cubature_points(const PointPosterior& p) {
  const double sf = std::sqrt(2.0 * std::max(p.var_f, 0.0));
  const double sg = std::sqrt(2.0 * std::max(p.var_g, 0.0));
  return {{{p.mu_f + sf, p.mu_g, 0.25},
           {p.mu_f - sf, p.mu_g, 0.25},
           {p.mu_f, p.mu_g + sg, 0.25},
           {p.mu_f, p.mu_g - sg, 0.25}}};
}

CubatureStd cubature_std(const PointPosterior& p, double delta) {
  const auto pts = cubature_points(p);
  CubatureStd out;
  double vals[4];
  for (int i = 0; i < 4; ++i) {
    vals[i] = tail_prob(pts[i].f_val, pts[i].g_val, delta);
    out.mean += pts[i].weight * vals[i];
  }
  double var = 0.0;
  for (int i = 0; i < 4; ++i)
    var += pts[i].weight * (vals[i] - out.mean) * (vals[i] - out.mean);
  out.std_dev = std::sqrt(var);
  return out;
}

double acquisition_value(const Vector& x, const TrainedVhgpr& m,
                         const ProblemSpec& prob) {
  if (x.size() != prob.dim())
    throw std::invalid_argument("acquisition_value: dimension mismatch");
  return cubature_std(vhgpr_predict(m, x), prob.delta).std_dev *
         prob.density(x);
}

AcquisitionResult select_next(const TrainedVhgpr& m, const ProblemSpec& prob,
                              Index n_candidates, uint64_t seed) {
  check_problem(prob);
  if (n_candidates < 1)
    throw std::invalid_argument("select_next: need n_candidates >= 1");
  const Index d = prob.dim();
  const Index n_lh = n_candidates / 10;

  Matrix pool(n_candidates + n_lh, d);
  Rng rng(derive_seed(seed, "select-pool"));
  for (Index i = 0; i < n_candidates; ++i)
    pool.row(i) = prob.draw_input(rng).transpose();
  if (n_lh > 0) {
    Matrix u = latin_hypercube(n_lh, d, derive_seed(seed, "select-lh"));
    const Vector lo = prob.domain.col(0);
    const Vector span = prob.domain.col(1) - prob.domain.col(0);
    for (Index i = 0; i < n_lh; ++i)
      pool.row(n_candidates + i) =
          (lo + u.row(i).transpose().cwiseProduct(span)).transpose();
  }

  Vector mu_f, var_f, mu_g, var_g;
  vhgpr_predict(m, pool, mu_f, var_f, mu_g, var_g);

  AcquisitionResult r;
  r.candidate_values.resize(pool.rows());
  Index best = 0;
  for (Index i = 0; i < pool.rows(); ++i) {
    const PointPosterior p{mu_f[i], var_f[i], mu_g[i], var_g[i]};
    r.candidate_values[i] = cubature_std(p, prob.delta).std_dev *
                            prob.density(pool.row(i).transpose());
    if (r.candidate_values[i] > r.candidate_values[best]) best = i;
  }
  r.x_star = pool.row(best).transpose();
  r.value = r.candidate_values[best];
  r.candidates = std::move(pool);
  return r;
}

double variance_upper_bound(const TrainedVhgpr& m, const ProblemSpec& prob,
                            Index n_quad) {
  check_problem(prob);
  Quadrature q = problem_quadrature(prob, n_quad);
  Vector mu_f, var_f, mu_g, var_g;
  vhgpr_predict(m, q.points, mu_f, var_f, mu_g, var_g);
  double acc = 0.0;
  for (Index i = 0; i < q.weights.size(); ++i) {
    const PointPosterior p{mu_f[i], var_f[i], mu_g[i], var_g[i]};
    acc += q.weights[i] * cubature_std(p, prob.delta).std_dev;
  }
  return 0.5 * acc;
}

double variance_upper_bound_from(const PosteriorFn& post,
                                 const ProblemSpec& prob, Index n_quad) {
  check_problem(prob);
  Quadrature q = problem_quadrature(prob, n_quad);
  double acc = 0.0;
  for (Index i = 0; i < q.weights.size(); ++i)
    acc += q.weights[i] *
           cubature_std(post(q.points.row(i).transpose()), prob.delta).std_dev;
  return 0.5 * acc;
}

}  // namespace stochbed
