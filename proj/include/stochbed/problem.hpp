#pragma once

#include <functional>
#include <string>

#include "stochbed/quadrature.hpp"
#include "stochbed/rng.hpp"
#include "stochbed/types.hpp"

namespace stochbed {

/// A target estimation problem: input density, stochastic response, and the
/// exceedance threshold. All callables must be pure and seed-deterministic
/// so that runs replay exactly.
struct ProblemSpec {
  std::string id;
  double delta = 0.0;

  /// Input density p_X, evaluable pointwise.
  std::function<double(const Vector&)> density;
  /// One draw x ~ p_X.
  std::function<Vector(Rng&)> draw_input;
  /// One stochastic response draw S(x, omega), omega realized from the seed.
  std::function<double(const Vector&, uint64_t)> respond;
  /// Inverse-CDF map from the unit cube to input space.
  std::function<Vector(const Vector&)> from_unit;
  /// Probability-weighted integration rule over the input space. The
  /// argument requests a per-axis resolution for tensor rules; catalog-based
  /// rules may ignore it.
  std::function<Quadrature(Index)> quadrature;

  /// Per-dimension [lo, hi] search box, d x 2.
  Matrix domain;

  Index dim() const { return domain.rows(); }
};

void check_problem(const ProblemSpec& prob);

/// The problem's integration rule at the requested resolution, validated.
Quadrature problem_quadrature(const ProblemSpec& prob, Index n_quad);

/// Maps rows of [0,1)^d through the problem's inverse-CDF transform.
Matrix map_to_input(const Matrix& unit_points, const ProblemSpec& prob);

/// Scales rows of [0,1)^d affinely onto the problem's search box.
Matrix map_to_box(const Matrix& unit_points, const ProblemSpec& prob);

/// Scaffold for independent Gaussian inputs N(mean_i, sd_i^2): fills density,
/// sampler, unit map, tensor Gauss-Hermite quadrature, and a mean +- 5 sd
/// box. Caller sets id, delta, and respond.
ProblemSpec gaussian_input_problem(const Vector& mean, const Vector& sd);

}  // namespace stochbed
