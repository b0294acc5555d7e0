#pragma once

#include <cstdint>

#include "stochbed/benchmarks.hpp"
#include "stochbed/problem.hpp"
#include "stochbed/vhgpr.hpp"

namespace stochbed {

/// Monte Carlo probability estimate with its binomial standard error.
struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  Index n_samples = 0;
  std::uint64_t seed = 0;
};

/// Brute-force exceedance probability: n input draws, one response draw each,
/// exceedance fraction of delta. Per-sample seeds derive from the master seed
/// by index, so the tally is independent of evaluation order. Results are
/// cached on disk when STOCHBED_CACHE_DIR is set.
McEstimate exact_mc(const ProblemSpec& prob, Index n, std::uint64_t seed);

struct LogEvidenceEstimate {
  double value = 0.0;  ///< log of the MC mean
  double ci = 0.0;     ///< one delta-method standard error of value
  Index n_mc = 0;
};

/// Monte Carlo estimate of the marginal likelihood of a heteroscedastic GP
/// dataset: sample latent (f, g) from their priors, average the Gaussian
/// likelihood. Cost grows fast with n, hence the n <= 4 guard. The evidence
/// lower bound must sit below value + 3 ci.
LogEvidenceEstimate brute_force_log_evidence(const Dataset& data,
                                             const VhgprHyper& hyper, Index n_mc,
                                             std::uint64_t seed);

/// Group-based reference probability for the ship problem: integrate the roll
/// equation across the whole record from rest, restarting from rest at the
/// window boundary after any capsize, and count windows whose roll maximum
/// exceeds delta (a capsized window counts as exceeding). Deterministic; the
/// returned std_error is the binomial error over groups.
McEstimate ship_exact(const WaveField& field, const std::vector<WaveGroup>& catalog,
                      const RollParams& params, double delta, bool use_abs = false,
                      int substeps_override = 0);

}  // namespace stochbed
