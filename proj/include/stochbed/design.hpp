#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stochbed/acquisition.hpp"
#include "stochbed/problem.hpp"
#include "stochbed/sgpr.hpp"
#include "stochbed/vhgpr.hpp"

namespace stochbed {

/// n stratified points in the unit hypercube: along every axis exactly one
/// point falls in each stratum [k/n, (k+1)/n), jittered within the stratum.
Matrix latin_hypercube(Index n, Index d, uint64_t seed);

/// Plug-in estimate of P(S > delta): integrates tail_prob over the posterior
/// means against the input density, by the problem's deterministic
/// quadrature. Always in [0, 1].
double estimate_pe(const TrainedVhgpr& m, const ProblemSpec& prob,
                   Index n_quad = 200);
double estimate_pe(const SgprModel& m, const ProblemSpec& prob,
                   Index n_quad = 200);

/// Same estimate for an arbitrary pointwise posterior (test hook).
double estimate_pe_from(const PosteriorFn& post, const ProblemSpec& prob,
                        Index n_quad = 200);

enum class SurrogateKind { vhgpr, sgpr };
enum class SamplePolicy { acquisition, latin };

struct RunConfig {
  SamplePolicy policy = SamplePolicy::acquisition;
  SurrogateKind surrogate = SurrogateKind::vhgpr;
  Index n_candidates = 10000;
  Index n_quad = 200;
};

struct IterationRow {
  Vector x;
  double y = 0.0;
  double acq_value = 0.0;
  double pe = 0.0;
  double wall_ms = 0.0;
};

struct RunRecord {
  std::string problem_id;
  uint64_t seed = 0;
  Index n_init = 0;
  Index n_iter_requested = 0;
  Matrix init_inputs;
  Vector init_outputs;
  double pe_initial = 0.0;
  double wall_ms_initial = 0.0;
  std::vector<IterationRow> steps;
  bool aborted = false;
  std::string abort_reason;
  std::shared_ptr<const TrainedVhgpr> final_vhgpr;
  std::shared_ptr<const SgprModel> final_sgpr;

  /// pe_initial followed by each step's estimate.
  Vector pe_trajectory() const;
};

/// One full design run. Initializes with a Latin hypercube design scaled
/// onto the search box, then repeats {select, query, append, refit, record
/// P_e}. The acquisition policy picks points by select_next; the latin
/// policy walks a pre-generated Latin hypercube extension over the same
/// box, so the two share every other code path. A failed refit is retried
/// once from a fresh initialization; a second failure aborts, keeping
/// partial results.
RunRecord run_design(const ProblemSpec& prob, Index n_init, Index n_iter,
                     uint64_t seed, const RunConfig& cfg);

/// run_design with the default sequential policy (acquisition + VHGPR).
RunRecord run_sequential(const ProblemSpec& prob, Index n_init, Index n_iter,
                         uint64_t seed);

}  // namespace stochbed
