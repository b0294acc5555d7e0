#include "stochbed/design.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stochbed {

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

Matrix latin_hypercube(Index n, Index d, uint64_t seed) {
  if (n < 1 || d < 1)
    throw std::invalid_argument("latin_hypercube: need n >= 1 and d >= 1");
  Matrix u(n, d);
  for (Index j = 0; j < d; ++j) {
    Rng rng(derive_seed(seed, "lh-axis", static_cast<uint64_t>(j)));
    std::vector<Index> perm(n);
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index k = n - 1; k > 0; --k)
      std::swap(perm[k], perm[rng.uniform_index(static_cast<uint64_t>(k) + 1)]);
    for (Index i = 0; i < n; ++i)
      u(i, j) = (static_cast<double>(perm[i]) + rng.uniform()) /
                static_cast<double>(n);
  }
  return u;
}

double estimate_pe(const TrainedVhgpr& m, const ProblemSpec& prob,
                   Index n_quad) {
  check_problem(prob);
  Quadrature q = problem_quadrature(prob, n_quad);
  Vector mu_f, var_f, mu_g, var_g;
  vhgpr_predict(m, q.points, mu_f, var_f, mu_g, var_g);
  double acc = 0.0;
  for (Index i = 0; i < q.weights.size(); ++i)
    acc += q.weights[i] * tail_prob(mu_f[i], mu_g[i], prob.delta);
  if (!std::isfinite(acc))
    throw std::runtime_error("estimate_pe: non-finite quadrature");
  return clamp_unit(acc);
}

double estimate_pe(const SgprModel& m, const ProblemSpec& prob, Index n_quad) {
  check_problem(prob);
  Quadrature q = problem_quadrature(prob, n_quad);
  Vector mean, var;
  sgpr_predict(m, q.points, mean, var);
  const double g0 = 2.0 * std::log(m.hyper.noise_sd);
  double acc = 0.0;
  for (Index i = 0; i < q.weights.size(); ++i)
    acc += q.weights[i] * tail_prob(mean[i], g0, prob.delta);
  if (!std::isfinite(acc))
    throw std::runtime_error("estimate_pe: non-finite quadrature");
  return clamp_unit(acc);
}

double estimate_pe_from(const PosteriorFn& post, const ProblemSpec& prob,
                        Index n_quad) {
  check_problem(prob);
  Quadrature q = problem_quadrature(prob, n_quad);
  double acc = 0.0;
  for (Index i = 0; i < q.weights.size(); ++i) {
    const PointPosterior p = post(q.points.row(i).transpose());
    acc += q.weights[i] * tail_prob(p.mu_f, p.mu_g, prob.delta);
  }
  if (!std::isfinite(acc))
    throw std::runtime_error("estimate_pe: non-finite quadrature");
  return clamp_unit(acc);
}

Vector RunRecord::pe_trajectory() const {
  Vector out(1 + static_cast<Index>(steps.size()));
  out[0] = pe_initial;
  for (std::size_t t = 0; t < steps.size(); ++t)
    out[1 + static_cast<Index>(t)] = steps[t].pe;
  return out;
}

RunRecord run_design(const ProblemSpec& prob, Index n_init, Index n_iter,
                     uint64_t seed, const RunConfig& cfg) {
  check_problem(prob);
  if (n_init < 5) throw std::invalid_argument("run_design: need n_init >= 5");
  if (n_iter < 0) throw std::invalid_argument("run_design: n_iter < 0");
  if (cfg.policy == SamplePolicy::acquisition &&
      cfg.surrogate != SurrogateKind::vhgpr)
    throw std::invalid_argument(
        "run_design: acquisition policy requires the vhgpr surrogate");

  const Index d = prob.dim();
  RunRecord rec;
  rec.problem_id = prob.id;
  rec.seed = seed;
  rec.n_init = n_init;
  rec.n_iter_requested = n_iter;

  const auto t0 = std::chrono::steady_clock::now();
  // Designs fill the search box, not the input distribution: the tail
  // integrand peaks where the density is already small, and a
  // quantile-mapped design never places a point out there, leaving the
  // surrogate blind in exactly the band that drives P_e.
  rec.init_inputs = map_to_box(
      latin_hypercube(n_init, d, derive_seed(seed, "init-design")), prob);
  rec.init_outputs.resize(n_init);
  for (Index i = 0; i < n_init; ++i)
    rec.init_outputs[i] =
        prob.respond(rec.init_inputs.row(i).transpose(),
                     derive_seed(seed, "query", static_cast<uint64_t>(i)));

  Matrix extension;
  if (cfg.policy == SamplePolicy::latin && n_iter > 0)
    extension = map_to_box(
        latin_hypercube(n_iter, d, derive_seed(seed, "extend-design")), prob);

  Dataset data{rec.init_inputs, rec.init_outputs};
  std::shared_ptr<TrainedVhgpr> vm;
  std::shared_ptr<SgprModel> sm;

  // One retry from a fresh initialization; a second failure propagates.
  auto fit_current = [&](Index t) {
    if (cfg.surrogate == SurrogateKind::vhgpr) {
      try {
        vm = std::make_shared<TrainedVhgpr>(
            vm ? vhgpr_refit(*vm, data, derive_seed(seed, "fit", t))
               : vhgpr_fit(data, derive_seed(seed, "fit", t)));
      } catch (const ConditioningError&) {
        vm = std::make_shared<TrainedVhgpr>(
            vhgpr_fit(data, derive_seed(seed, "fit-retry", t)));
      }
    } else {
      try {
        sm = std::make_shared<SgprModel>(
            sgpr_fit(data, derive_seed(seed, "fit", t)));
      } catch (const ConditioningError&) {
        sm = std::make_shared<SgprModel>(
            sgpr_fit(data, derive_seed(seed, "fit-retry", t)));
      }
    }
  };
  auto current_pe = [&]() {
    return cfg.surrogate == SurrogateKind::vhgpr
               ? estimate_pe(*vm, prob, cfg.n_quad)
               : estimate_pe(*sm, prob, cfg.n_quad);
  };

  try {
    fit_current(0);
    rec.pe_initial = current_pe();
  } catch (const std::exception& ex) {
    rec.aborted = true;
    rec.abort_reason = ex.what();
    return rec;
  }
  rec.wall_ms_initial = ms_since(t0);

  for (Index t = 1; t <= n_iter; ++t) {
    const auto it0 = std::chrono::steady_clock::now();
    IterationRow row;
    if (cfg.policy == SamplePolicy::acquisition) {
      AcquisitionResult a = select_next(*vm, prob, cfg.n_candidates,
                                        derive_seed(seed, "select", t));
      row.x = a.x_star;
      row.acq_value = a.value;
    } else {
      row.x = extension.row(t - 1).transpose();
    }
    row.y = prob.respond(
        row.x, derive_seed(seed, "query", static_cast<uint64_t>(n_init + t - 1)));
    data.append(row.x, row.y);
    try {
      fit_current(t);
      row.pe = current_pe();
    } catch (const std::exception& ex) {
      rec.aborted = true;
      rec.abort_reason = ex.what();
      break;
    }
    row.wall_ms = ms_since(it0);
    rec.steps.push_back(std::move(row));
  }

  rec.final_vhgpr = vm;
  rec.final_sgpr = sm;
  return rec;
}

RunRecord run_sequential(const ProblemSpec& prob, Index n_init, Index n_iter,
                         uint64_t seed) {
  return run_design(prob, n_init, n_iter, seed, RunConfig{});
}

}  // namespace stochbed
