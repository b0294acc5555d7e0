#pragma once

#include <array>
#include <functional>

#include "stochbed/problem.hpp"
#include "stochbed/vhgpr.hpp"

namespace stochbed {

/// P(S > delta) for a response distributed N(f_val, e^{g_val}).
double tail_prob(double f_val, double g_val, double delta);

struct CubatureStd {
  double mean = 0.0;
  double std_dev = 0.0;
};

struct CubaturePoint {
  double f_val = 0.0;
  double g_val = 0.0;
  double weight = 0.0;
};

/// The 4-point spherical cubature rule for a diagonal Gaussian posterior on
/// (f, g); weights sum to 1.
std::array<CubaturePoint, 4> cubature_points(const PointPosterior& p);

/// Mean and standard deviation of tail_prob under the Gaussian posterior at
/// one point, by 4-point spherical cubature: the posterior mean perturbed by
/// +-sqrt(2 var) along the f and g axes, weight 1/4 each. The rule integrates
/// polynomials of total degree <= 3 exactly.
CubatureStd cubature_std(const PointPosterior& p, double delta);

/// std_dev[tail_prob] at x, weighted by the input density.
double acquisition_value(const Vector& x, const TrainedVhgpr& m,
                         const ProblemSpec& prob);

struct AcquisitionResult {
  Vector x_star;
  double value = 0.0;
  Matrix candidates;
  Vector candidate_values;
};

/// Maximizes the acquisition over a reproducible candidate pool:
/// n_candidates density draws followed by n_candidates/10 Latin hypercube
/// points over the domain box. Ties break toward the lowest pool index, so
/// the result is independent of evaluation order.
AcquisitionResult select_next(const TrainedVhgpr& m, const ProblemSpec& prob,
                              Index n_candidates, uint64_t seed);

using PosteriorFn = std::function<PointPosterior(const Vector&)>;

/// One half of the density-weighted integral of std_dev[tail_prob], an upper
/// bound on the variance of the plug-in exceeding-probability estimator.
double variance_upper_bound(const TrainedVhgpr& m, const ProblemSpec& prob,
                            Index n_quad);

/// Same bound for an arbitrary pointwise posterior (test hook).
double variance_upper_bound_from(const PosteriorFn& post,
                                 const ProblemSpec& prob, Index n_quad);

}  // namespace stochbed
