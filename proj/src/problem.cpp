#include "stochbed/problem.hpp"

#include <cmath>
#include <stdexcept>

namespace stochbed {

void check_problem(const ProblemSpec& prob) {
  if (prob.domain.rows() < 1 || prob.domain.cols() != 2)
    throw std::invalid_argument("problem: domain must be d x 2");
  if (!(prob.domain.col(0).array() < prob.domain.col(1).array()).all())
    throw std::invalid_argument("problem: domain lower bounds must be < upper");
  if (!std::isfinite(prob.delta))
    throw std::invalid_argument("problem: threshold must be finite");
  if (!prob.density || !prob.draw_input || !prob.respond || !prob.from_unit)
    throw std::invalid_argument("problem: missing callable");
}

Quadrature problem_quadrature(const ProblemSpec& prob, Index n_quad) {
  if (!prob.quadrature)
    throw std::invalid_argument("problem: no quadrature rule available");
  Quadrature q = prob.quadrature(n_quad);
  if (q.points.rows() < 1 || q.points.rows() != q.weights.size() ||
      q.points.cols() != prob.dim())
    throw std::runtime_error("problem: malformed quadrature rule");
  return q;
}

Matrix map_to_input(const Matrix& unit_points, const ProblemSpec& prob) {
  check_problem(prob);
  if (unit_points.cols() != prob.dim())
    throw std::invalid_argument("map_to_input: dimension mismatch");
  if (!((unit_points.array() >= 0.0).all() &&
        (unit_points.array() < 1.0).all()))
    throw std::invalid_argument("map_to_input: points must lie in [0,1)^d");
  Matrix out(unit_points.rows(), unit_points.cols());
  for (Index i = 0; i < unit_points.rows(); ++i)
    out.row(i) = prob.from_unit(unit_points.row(i).transpose()).transpose();
  return out;
}

Matrix map_to_box(const Matrix& unit_points, const ProblemSpec& prob) {
  check_problem(prob);
  if (unit_points.cols() != prob.dim())
    throw std::invalid_argument("map_to_box: dimension mismatch");
  if (!((unit_points.array() >= 0.0).all() &&
        (unit_points.array() < 1.0).all()))
    throw std::invalid_argument("map_to_box: points must lie in [0,1)^d");
  const auto lo = prob.domain.col(0).transpose().array();
  const auto span =
      (prob.domain.col(1) - prob.domain.col(0)).transpose().array();
  Matrix out(unit_points.rows(), unit_points.cols());
  for (Index i = 0; i < unit_points.rows(); ++i)
    out.row(i).array() = lo + unit_points.row(i).array() * span;
  return out;
}

ProblemSpec gaussian_input_problem(const Vector& mean, const Vector& sd) {
  const Index d = mean.size();
  if (sd.size() != d || !(sd.array() > 0.0).all())
    throw std::invalid_argument("gaussian_input_problem: bad scale vector");

  ProblemSpec prob;
  prob.domain.resize(d, 2);
  prob.domain.col(0) = mean - 5.0 * sd;
  prob.domain.col(1) = mean + 5.0 * sd;

  const double log_norm =
      -0.5 * d * std::log(2.0 * M_PI) - sd.array().log().sum();
  prob.density = [mean, sd, log_norm](const Vector& x) {
    const double q = ((x - mean).array() / sd.array()).square().sum();
    return std::exp(log_norm - 0.5 * q);
  };
  prob.draw_input = [mean, sd](Rng& rng) {
    Vector x(mean.size());
    for (Index j = 0; j < mean.size(); ++j)
      x[j] = mean[j] + sd[j] * rng.normal();
    return x;
  };
  prob.from_unit = [mean, sd](const Vector& u) {
    Vector x(mean.size());
    for (Index j = 0; j < mean.size(); ++j) {
      // Open-interval clamp keeps the quantile defined at stratum edges.
      const double p = std::clamp(u[j], 1e-300, 1.0 - 1e-16);
      x[j] = mean[j] + sd[j] * normal_quantile(p);
    }
    return x;
  };
  prob.quadrature = [mean, sd](Index n_1d) {
    return gaussian_quadrature(mean, sd, n_1d);
  };
  return prob;
}

}  // namespace stochbed
