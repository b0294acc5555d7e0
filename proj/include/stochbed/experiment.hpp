#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "stochbed/design.hpp"
#include "stochbed/oracle.hpp"
#include "stochbed/problem.hpp"

namespace stochbed {

/// A replicated, seeded experiment: one problem, one method, `replications`
/// independent runs with seeds master+0, master+1, ... Artifacts land under
/// out_dir: run-XXX.csv per replication, summary.csv, manifest.json.
struct ExperimentConfig {
  std::string problem = "synthetic1d";
  std::string method = "seq-vhgpr";
  Index n_init = 40;
  Index n_iter = 60;
  Index replications = 1;
  std::uint64_t seed = 1;
  std::string out_dir = "runs";
  int jobs = 1;
  /// Problem and budget knobs; see experiment_override_keys().
  std::map<std::string, std::string> overrides;
};

const std::vector<std::string>& problem_ids();
const std::vector<std::string>& method_ids();

/// Override keys every experiment accepts, with their defaults:
///   hours=150 field-seed=1 (ship record), oracle-samples=1000000,
///   oracle-seed=9001, n-candidates=10000, n-quad=200, delta (per problem),
///   use-abs=0 (ship |xi| switch).
const std::vector<std::string>& experiment_override_keys();

/// A problem plus the ground-truth estimator that goes with it.
struct BenchmarkSetup {
  ProblemSpec prob;
  std::function<McEstimate()> oracle;
};

/// Builds the named benchmark, applying overrides. Unknown ids or override
/// keys raise invalid_argument listing the valid choices.
BenchmarkSetup make_benchmark(const std::string& problem_id,
                              const std::map<std::string, std::string>& overrides);

/// Per-iteration statistics of P_e across replications, with the oracle's
/// value and its 5% band. Row 0 is the estimate after the initial fit.
struct SummaryTable {
  Vector mean;
  Vector stddev;
  Vector median;
  double oracle = 0.0;
  double oracle_lo = 0.0;
  double oracle_hi = 0.0;
  Index n_runs = 0;

  Index rows() const { return mean.size(); }
};

struct MethodOutcome {
  std::vector<RunRecord> runs;
  SummaryTable summary;
  std::vector<Index> failed;  ///< replication indices that aborted
  McEstimate oracle;
};

/// Runs the configured experiment and writes its artifacts. Reference method
/// "exact-mc" estimates once per replication (budget = oracle-samples) and
/// reports a constant trajectory. Failed replications are recorded in the
/// manifest and excluded from the summary; at least one must succeed.
MethodOutcome run_experiment(const ExperimentConfig& cfg);

struct ComparisonReport {
  std::vector<std::string> methods;
  std::vector<MethodOutcome> outcomes;      ///< aligned with methods
  std::vector<double> final_median;         ///< last-row median per method
  std::vector<double> final_std;            ///< last-row std per method
  std::vector<double> ratio_to_oracle;      ///< final_median / oracle
  double oracle = 0.0;
};

/// Runs each method on the identical problem, seeds, and budget, writing each
/// method's artifacts under out_dir/<method>/ plus a combined compare.csv.
ComparisonReport compare(const std::vector<std::string>& methods,
                         const ExperimentConfig& cfg);

}  // namespace stochbed
