#pragma once

#include "stochbed/types.hpp"

namespace stochbed {

/// Discrete quadrature rule: integral h(x) w(x) dx ~ sum_i weights[i] *
/// h(points.row(i)). The weight function w is baked into the weights, so
/// for a probability density the weights sum to (approximately) one.
struct Quadrature {
  Matrix points;   // one node per row
  Vector weights;  // same length as points has rows

  Index size() const { return weights.size(); }
};

/// Physicists' Gauss-Hermite rule: integral h(t) exp(-t^2) dt ~ sum w_i
/// h(t_i), computed from the symmetric tridiagonal Jacobi matrix.
void gauss_hermite(int n, Vector& nodes, Vector& weights);

/// Tensor-product rule for a diagonal Gaussian N(mean, diag(sd^2)) with
/// n_1d nodes per axis. Nodes whose product weight falls below weight_cutoff
/// are dropped; the survivors integrate E[h(X)] for smooth h.
Quadrature gaussian_quadrature(const Vector& mean, const Vector& sd, int n_1d,
                               double weight_cutoff = 1e-18);

}  // namespace stochbed
