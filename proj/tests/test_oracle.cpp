#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "stochbed/acquisition.hpp"
#include "stochbed/benchmarks.hpp"
#include "stochbed/oracle.hpp"
#include "stochbed/problem.hpp"
#include "stochbed/quadrature.hpp"
#include "stochbed/rng.hpp"
#include "stochbed/sgpr.hpp"
#include "stochbed/vhgpr.hpp"

using namespace stochbed;

namespace {

SpectrumConfig short_config(double periods, double dt = 0.1) {
  SpectrumConfig cfg;
  cfg.dt = dt;
  cfg.duration = periods * cfg.peak_period();
  return cfg;
}

// One moderately long sea state shared by the ship oracle tests; synthesizing
// and sweeping it dominates this binary's runtime, so do it once.
const ShipProblem& shared_ship() {
  static const ShipProblem prob = make_shiproll(short_config(2500.0), 5);
  return prob;
}

double pooled_se(const McEstimate& a, const McEstimate& b) {
  return std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
}

}  // namespace

TEST_CASE("exact_mc rejects tiny sample budgets") {
  const ProblemSpec prob = make_synthetic1d();
  CHECK_THROWS_AS(exact_mc(prob, 999, 1), std::invalid_argument);
}

TEST_CASE("exact_mc is certain when the threshold clears every response") {
  ProblemSpec prob = gaussian_input_problem(Vector::Zero(1), Vector::Ones(1));
  prob.id = "toy-square";
  prob.respond = [](const Vector& x, std::uint64_t) { return x[0] * x[0]; };

  prob.delta = -1.0;  // below the response range entirely
  McEstimate sure = exact_mc(prob, 1000, 3);
  CHECK(sure.value == 1.0);
  CHECK(sure.std_error == 0.0);
  CHECK(sure.n_samples == 1000);

  prob.delta = 1.0e9;  // far above anything 1000 Gaussian draws can reach
  McEstimate never = exact_mc(prob, 1000, 3);
  CHECK(never.value == 0.0);
}

TEST_CASE("exact_mc matches the closed-form tail integral on the 1d testbed") {
  const ProblemSpec prob = make_synthetic1d();
  const Quadrature q = problem_quadrature(prob, 400);
  double ref = 0.0;
  for (Index i = 0; i < q.size(); ++i) {
    const double x = q.points(i, 0);
    const double gamma = synthetic1d_noise_sd(x);
    ref += q.weights[i] *
           tail_prob(synthetic1d_mean(x), 2.0 * std::log(gamma), prob.delta);
  }

  const McEstimate mc = exact_mc(prob, 200000, 20260816);
  CHECK(mc.std_error > 0.0);
  CHECK(std::abs(mc.value - ref) <= 3.0 * mc.std_error);
}

TEST_CASE("exact_mc runs with independent seeds agree within pooled error") {
  const ProblemSpec prob = make_synthetic1d();
  const McEstimate a = exact_mc(prob, 100000, 11);
  const McEstimate b = exact_mc(prob, 100000, 22);
  CHECK(a.value != b.value);  // distinct seeds really resample
  CHECK(std::abs(a.value - b.value) <= 6.0 * pooled_se(a, b));
}

TEST_CASE("averaging many small runs matches one large run") {
  const ProblemSpec prob = make_synthetic1d();
  double mean = 0.0, var_sum = 0.0;
  const int runs = 50;
  for (int i = 0; i < runs; ++i) {
    const McEstimate e = exact_mc(prob, 10000, 1000 + static_cast<std::uint64_t>(i));
    mean += e.value;
    var_sum += e.std_error * e.std_error;
  }
  mean /= runs;
  const double se_mean = std::sqrt(var_sum) / runs;

  const McEstimate big = exact_mc(prob, 500000, 777);
  const double pooled = std::sqrt(se_mean * se_mean + big.std_error * big.std_error);
  CHECK(std::abs(mean - big.value) <= 3.0 * pooled);
}

TEST_CASE("exact_mc results round-trip through the cache directory") {
  const char* dir = "oracle_cache_dir";
  setenv("STOCHBED_CACHE_DIR", dir, 1);
  const ProblemSpec prob = make_synthetic1d();

  const McEstimate first = exact_mc(prob, 2000, 7);
  REQUIRE(std::filesystem::exists(dir));
  std::filesystem::path entry;
  for (const auto& f : std::filesystem::directory_iterator(dir)) entry = f.path();
  REQUIRE(!entry.empty());

  const McEstimate again = exact_mc(prob, 2000, 7);
  CHECK(again.value == first.value);
  CHECK(again.std_error == first.std_error);
  CHECK(again.seed == first.seed);

  // A mangled cache entry is ignored and recomputed, not trusted.
  std::ofstream(entry, std::ios::trunc) << "not a number\n";
  const McEstimate redone = exact_mc(prob, 2000, 7);
  CHECK(redone.value == first.value);

  // A different budget may not collide with the stored entry.
  const McEstimate other = exact_mc(prob, 3000, 7);
  CHECK(other.n_samples == 3000);

  unsetenv("STOCHBED_CACHE_DIR");
  std::filesystem::remove_all(dir);
}

TEST_CASE("brute-force evidence rejects oversized datasets and tiny budgets") {
  Dataset d;
  d.inputs = Matrix::Random(5, 1);
  d.outputs = Vector::Random(5);
  VhgprHyper h;
  h.kernel_f = KernelParams::isotropic(1.0, 1.0, 1);
  h.kernel_g = KernelParams::isotropic(0.5, 1.0, 1);
  CHECK_THROWS_AS(brute_force_log_evidence(d, h, 10000, 1), std::invalid_argument);

  d.inputs = Matrix::Random(3, 1);
  d.outputs = Vector::Random(3);
  CHECK_THROWS_AS(brute_force_log_evidence(d, h, 50, 1), std::invalid_argument);
}

TEST_CASE("brute-force evidence collapses to the exact homoscedastic marginal") {
  Dataset d;
  d.inputs = Matrix(3, 1);
  d.inputs << 0.0, 0.7, 1.6;
  d.outputs = Vector(3);
  d.outputs << 0.3, -0.5, 1.1;

  const double noise_sd = 0.3;
  VhgprHyper h;
  h.kernel_f = KernelParams::isotropic(1.2, 0.8, 1);
  // A vanishing g-kernel pins the log-variance at mu0, so the evidence is the
  // standard GP marginal with noise_sd = exp(mu0 / 2).
  h.kernel_g = KernelParams::isotropic(1e-6, 1.0, 1);
  h.mu0 = 2.0 * std::log(noise_sd);

  SgprHyper sh;
  sh.kernel = h.kernel_f;
  sh.noise_sd = noise_sd;
  const double exact = sgpr_log_marginal(d, sh);

  const LogEvidenceEstimate est = brute_force_log_evidence(d, h, 200000, 3);
  CHECK(est.ci > 0.0);
  CHECK(std::abs(est.value - exact) <= 3.0 * est.ci + 1e-6);
}

TEST_CASE("the variational bound sits below the brute-force evidence") {
  for (int k = 0; k < 5; ++k) {
    Rng r(derive_seed(99, "instance", static_cast<std::uint64_t>(k)));
    const Index n = 2 + k % 3;
    Dataset d;
    d.inputs = Matrix(n, 1);
    d.outputs = Vector(n);
    for (Index i = 0; i < n; ++i) {
      d.inputs(i, 0) = 2.0 * r.uniform();
      d.outputs[i] = r.normal();
    }
    VhgprHyper h;
    h.kernel_f = KernelParams::isotropic(1.0, 0.7, 1);
    h.kernel_g = KernelParams::isotropic(0.6, 1.0, 1);
    h.mu0 = -1.5;

    const Vector lambda =
        vhgpr_optimize_lambda(d, h, Vector::Constant(n, 0.5));
    const double bound = elbo(d, lambda, h);
    const LogEvidenceEstimate est =
        brute_force_log_evidence(d, h, 100000, 500 + static_cast<std::uint64_t>(k));
    CHECK(bound <= est.value + 3.0 * est.ci);
  }
}

TEST_CASE("doubling the Monte Carlo budget tightens the evidence error bar") {
  Dataset d;
  d.inputs = Matrix(2, 1);
  d.inputs << 0.2, 1.1;
  d.outputs = Vector(2);
  d.outputs << 0.4, -0.9;
  VhgprHyper h;
  h.kernel_f = KernelParams::isotropic(1.0, 0.8, 1);
  h.kernel_g = KernelParams::isotropic(0.5, 1.2, 1);
  h.mu0 = -1.0;

  double ratio = 0.0;
  for (std::uint64_t s = 1; s <= 3; ++s) {
    const LogEvidenceEstimate narrow = brute_force_log_evidence(d, h, 100000, s);
    const LogEvidenceEstimate wide = brute_force_log_evidence(d, h, 50000, s + 10);
    ratio += wide.ci / narrow.ci;
  }
  ratio /= 3.0;
  CHECK(ratio > 1.2);
  CHECK(ratio < 1.7);
}

TEST_CASE("ship sweep is zero when the threshold clears the capsize level") {
  const ShipProblem& sp = shared_ship();
  const McEstimate est = ship_exact(*sp.field, *sp.catalog, RollParams{}, 10.0);
  CHECK(est.value == 0.0);
  CHECK(est.std_error == 0.0);
  CHECK(est.n_samples == static_cast<Index>(sp.catalog->size()));
}

TEST_CASE("ship sweep lands strictly inside (0,1) at the default threshold") {
  const ShipProblem& sp = shared_ship();
  const McEstimate est = ship_exact(*sp.field, *sp.catalog, RollParams{}, 0.3);
  CHECK(est.value > 0.0);
  CHECK(est.value < 1.0);
  const double n = static_cast<double>(est.n_samples);
  CHECK(est.std_error ==
        doctest::Approx(std::sqrt(est.value * (1.0 - est.value) / n))
            .epsilon(1e-12));
}

TEST_CASE("ship sweep is monotone in the threshold") {
  const ShipProblem& sp = shared_ship();
  const double lo = ship_exact(*sp.field, *sp.catalog, RollParams{}, 0.2).value;
  const double mid = ship_exact(*sp.field, *sp.catalog, RollParams{}, 0.3).value;
  const double hi = ship_exact(*sp.field, *sp.catalog, RollParams{}, 0.55).value;
  CHECK(lo >= mid);
  CHECK(mid >= hi);
}

TEST_CASE("grouping-threshold shifts of twenty percent leave the sweep stable") {
  const ShipProblem& sp = shared_ship();
  const McEstimate base = ship_exact(*sp.field, *sp.catalog, RollParams{}, 0.3);
  for (double scale : {0.8, 1.2}) {
    WaveField tweaked = *sp.field;
    tweaked.hs *= scale;  // rescales the grouping cut, not the waves
    const auto catalog = extract_groups(tweaked);
    const McEstimate est = ship_exact(tweaked, catalog, RollParams{}, 0.3);
    CHECK(std::abs(est.value - base.value) <= 2.0 * pooled_se(est, base));
  }
}

TEST_CASE("an independent half-length record agrees within pooled error") {
  const ShipProblem& sp = shared_ship();
  const McEstimate big = ship_exact(*sp.field, *sp.catalog, RollParams{}, 0.3);
  const WaveField half = synth_wave_field(short_config(1250.0), 11);
  const auto catalog = extract_groups(half);
  const McEstimate small = ship_exact(half, catalog, RollParams{}, 0.3);
  CHECK(std::abs(big.value - small.value) <= 3.0 * pooled_se(big, small));
}

TEST_CASE("halving the integration step preserves the sweep") {
  const ShipProblem& sp = shared_ship();
  const McEstimate coarse =
      ship_exact(*sp.field, *sp.catalog, RollParams{}, 0.3, false, 1);
  const McEstimate fine =
      ship_exact(*sp.field, *sp.catalog, RollParams{}, 0.3, false, 2);
  CHECK(std::abs(coarse.value - fine.value) <=
        2.0 * std::max(coarse.std_error, 1e-12));
}

TEST_CASE("capsize sweep caps the landing window and resumes from rest") {
  // Hand-built record: five 200-sample windows over 100 s, violent forcing
  // confined to one window. The parametric term destabilizes the roll there,
  // the state escapes, and divergence is detected one window downstream. The
  // sweep then re-integrates the finite prefix (whose final window is only
  // partially covered), caps the landing window, and restarts from rest.
  auto hot_field = [](int hot) {
    WaveField f;
    f.dt = 0.1;
    f.hs = 12.0;
    f.peak_period = 10.0;
    f.eta.resize(1000);
    for (Index i = 0; i < 1000; ++i) {
      const double t = 0.1 * static_cast<double>(i);
      const double amp = (hot >= 0 && i / 200 == hot) ? 28.0 : 0.5;
      f.eta[i] = amp * std::sin(2.0 * M_PI * t / 10.0);
    }
    f.rho = f.eta.cwiseAbs();
    return f;
  };
  std::vector<WaveGroup> cat(5);
  for (int g = 0; g < 5; ++g) {
    cat[g].t_start = 0.1 * (200.0 * g);
    cat[g].t_end = 0.1 * (200.0 * g + 199.0);
    cat[g].t_c = 0.5 * (cat[g].t_start + cat[g].t_end);
    cat[g].amplitude = 0.5;
    cat[g].length = 5.0;
  }

  const WaveField calm = hot_field(-1);
  CHECK(ship_exact(calm, cat, RollParams{}, 0.35, false).value == 0.0);
  // From rest, every calm window still tops zero at some sample.
  CHECK(ship_exact(calm, cat, RollParams{}, 0.0, false).value == 1.0);

  // Escape in window 2, detection in window 3: the escape window keeps its
  // (enormous) re-integrated maximum and the landing window caps, so two of
  // the five windows exceed.
  const WaveField mid = hot_field(2);
  CHECK(ship_exact(mid, cat, RollParams{}, 0.35, false).value ==
        doctest::Approx(0.4).epsilon(1e-12));

  // Escape in the final window ends the sweep; the calm prefix stays quiet.
  const WaveField tail = hot_field(4);
  CHECK(ship_exact(tail, cat, RollParams{}, 0.35, false).value ==
        doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("ship sweep rejects a catalog that does not tile the record") {
  const ShipProblem& sp = shared_ship();
  std::vector<WaveGroup> truncated(sp.catalog->begin(), sp.catalog->end() - 1);
  CHECK_THROWS_AS(ship_exact(*sp.field, truncated, RollParams{}, 0.3),
                  std::invalid_argument);
  std::vector<WaveGroup> offset(sp.catalog->begin() + 1, sp.catalog->end());
  CHECK_THROWS_AS(ship_exact(*sp.field, offset, RollParams{}, 0.3),
                  std::invalid_argument);
  CHECK_THROWS_AS(ship_exact(*sp.field, {}, RollParams{}, 0.3),
                  std::invalid_argument);
}

TEST_CASE("group-conditioned sampling reproduces the whole-record exceedance") {
  const ShipProblem& sp = shared_ship();
  const McEstimate exact = ship_exact(*sp.field, *sp.catalog, RollParams{}, 0.3);
  const McEstimate mc = exact_mc(sp.spec, 1000, 42);
  // The sampled estimator smooths over neighboring groups and warm-up history,
  // so only coarse agreement is promised.
  const double tol = 0.35 * exact.value + 3.0 * pooled_se(exact, mc);
  CHECK(std::abs(mc.value - exact.value) <= tol);
}
