#include "stochbed/optimize.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace stochbed {
namespace {

Vector project(const Vector& x, const Vector& lo, const Vector& hi) {
  return x.array().max(lo.array()).min(hi.array());
}

// Zero out direction components that push into an active bound.
void clip_at_bounds(const Vector& x, const Vector& lo, const Vector& hi,
                    Vector& d) {
  for (Index i = 0; i < x.size(); ++i)
    if ((x[i] <= lo[i] && d[i] < 0.0) || (x[i] >= hi[i] && d[i] > 0.0))
      d[i] = 0.0;
}

}  // namespace

OptimizeResult maximize_box(const Objective& objective, Vector x0,
                            const Vector& lower, const Vector& upper,
                            const OptimizeOptions& opts) {
  const Index n = x0.size();
  if (lower.size() != n || upper.size() != n)
    throw std::invalid_argument("maximize_box: bound size mismatch");
  if (!(lower.array() <= upper.array()).all())
    throw std::invalid_argument("maximize_box: lower bound above upper");

  // Internally minimize f = -objective.
  Vector x = project(x0, lower, upper);
  Vector g(n);
  double f = -objective(x, g);
  g = -g;
  if (!std::isfinite(f) || !g.allFinite())
    throw std::invalid_argument("maximize_box: objective not finite at x0");

  std::deque<Vector> S, Y;
  std::deque<double> rho;

  OptimizeResult res;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    Vector pg = x - project(x - g, lower, upper);
    if (pg.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
      res.converged = true;
      break;
    }

    // Two-loop recursion over stored curvature pairs.
    Vector d = -g;
    const int m = static_cast<int>(S.size());
    if (m > 0) {
      std::vector<double> a(m);
      for (int i = m - 1; i >= 0; --i) {
        a[i] = rho[i] * S[i].dot(d);
        d -= a[i] * Y[i];
      }
      d *= S[m - 1].dot(Y[m - 1]) / Y[m - 1].squaredNorm();
      for (int i = 0; i < m; ++i) {
        const double b = rho[i] * Y[i].dot(d);
        d += (a[i] - b) * S[i];
      }
    }
    clip_at_bounds(x, lower, upper, d);
    if (!d.allFinite() || d.dot(g) >= 0.0) {
      d = -g;
      clip_at_bounds(x, lower, upper, d);
    }

    // Backtracking line search; trial points are projected into the box,
    // so the Armijo slope uses the realized step.
    double t = 1.0;
    bool accepted = false;
    Vector x_new, g_new(n);
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      x_new = project(x + t * d, lower, upper);
      Vector step = x_new - x;
      if (step.lpNorm<Eigen::Infinity>() < 1e-16) break;
      const double val = -objective(x_new, g_new);
      const double slope = g.dot(step);
      if (std::isfinite(val) && g_new.allFinite() &&
          val <= f + 1e-4 * std::min(0.0, slope)) {
        f_new = val;
        g_new = -g_new;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.converged = true;  // no direction makes further progress
      break;
    }

    Vector s = x_new - x;
    Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opts.history) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }

    const double gain = f - f_new;
    x = x_new;
    g = g_new;
    f = f_new;
    if (gain < opts.rel_tol * std::max(1.0, std::abs(f))) {
      ++it;
      res.converged = true;
      break;
    }
  }

  res.x = x;
  res.value = -f;
  res.iterations = it;
  return res;
}

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f,
                                  const Vector& x, double step) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    g[i] = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

}  // namespace stochbed
