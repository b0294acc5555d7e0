#pragma once

#include <functional>

#include "stochbed/types.hpp"

namespace stochbed {

/// Objective callback: returns the value at x and fills grad (same size
/// as x) with the analytic gradient.
using Objective = std::function<double(const Vector&, Vector&)>;

struct OptimizeOptions {
  int max_iter = 500;
  int history = 8;        // L-BFGS memory
  double rel_tol = 1e-6;  // stop when the gain drops below rel_tol*max(1,|L|)
  double grad_tol = 1e-8; // stop on projected-gradient inf norm
};

struct OptimizeResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Box-constrained L-BFGS ascent. Accepted iterates never decrease the
/// objective; trial points where the objective is non-finite are rejected
/// by backtracking. x0 is projected into [lower, upper] first.
OptimizeResult maximize_box(const Objective& objective, Vector x0,
                            const Vector& lower, const Vector& upper,
                            const OptimizeOptions& opts = {});

/// Central finite-difference gradient of f at x.
Vector finite_difference_gradient(const std::function<double(const Vector&)>& f,
                                  const Vector& x, double step = 1e-5);

}  // namespace stochbed
