#include "stochbed/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "stochbed/kernel.hpp"
#include "stochbed/linalg.hpp"
#include "stochbed/rng.hpp"

namespace stochbed {

namespace {

std::uint64_t mix_u64(std::uint64_t h, std::uint64_t v) {
  std::uint64_t state = h ^ v;
  return splitmix64(state);
}

std::string mc_cache_path(const ProblemSpec& prob, Index n, std::uint64_t seed) {
  const char* dir = std::getenv("STOCHBED_CACHE_DIR");
  if (dir == nullptr || dir[0] == '\0') return {};
  std::uint64_t h = tag_hash(prob.id.c_str());
  std::uint64_t delta_bits = 0;
  std::memcpy(&delta_bits, &prob.delta, sizeof delta_bits);
  h = mix_u64(h, delta_bits);
  h = mix_u64(h, static_cast<std::uint64_t>(n));
  h = mix_u64(h, seed);
  char name[64];
  std::snprintf(name, sizeof name, "/exact-mc-%016llx.txt",
                static_cast<unsigned long long>(h));
  return std::string(dir) + name;
}

bool load_mc_cache(const std::string& path, McEstimate& est) {
  std::ifstream in(path);
  if (!in) return false;
  long long n = 0, seed = 0;
  if (!(in >> est.value >> est.std_error >> n >> seed)) return false;
  est.n_samples = static_cast<Index>(n);
  est.seed = static_cast<std::uint64_t>(seed);
  return est.n_samples > 0;
}

void save_mc_cache(const std::string& path, const McEstimate& est) {
  try {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream out(path, std::ios::trunc);
    char line[128];
    std::snprintf(line, sizeof line, "%.17g %.17g %lld %llu\n", est.value,
                  est.std_error, static_cast<long long>(est.n_samples),
                  static_cast<unsigned long long>(est.seed));
    out << line;
  } catch (const std::exception&) {
    // cache writes are best effort
  }
}

}  // namespace

McEstimate exact_mc(const ProblemSpec& prob, Index n, std::uint64_t seed) {
  check_problem(prob);
  if (n < 1000)
    throw std::invalid_argument("exact_mc: need at least 1000 samples");

  const std::string cache = mc_cache_path(prob, n, seed);
  if (!cache.empty()) {
    McEstimate cached;
    if (load_mc_cache(cache, cached) && cached.n_samples == n) return cached;
  }

  // Per-sample seeds keep the tally independent of evaluation order.
  Index count = 0;
  for (Index i = 0; i < n; ++i) {
    Rng draw(derive_seed(seed, "mc-input", static_cast<std::uint64_t>(i)));
    const Vector x = prob.draw_input(draw);
    const double y =
        prob.respond(x, derive_seed(seed, "mc-response", static_cast<std::uint64_t>(i)));
    if (y > prob.delta) ++count;
  }
  McEstimate est;
  est.value = static_cast<double>(count) / static_cast<double>(n);
  est.std_error = std::sqrt(est.value * (1.0 - est.value) / static_cast<double>(n));
  est.n_samples = n;
  est.seed = seed;
  if (!cache.empty()) save_mc_cache(cache, est);
  return est;
}

LogEvidenceEstimate brute_force_log_evidence(const Dataset& data,
                                             const VhgprHyper& hyper, Index n_mc,
                                             std::uint64_t seed) {
  const Index n = data.size();
  if (n < 1 || n > 4)
    throw std::invalid_argument(
        "brute_force_log_evidence: dataset must hold 1 to 4 points");
  if (n_mc < 100)
    throw std::invalid_argument("brute_force_log_evidence: n_mc too small");

  const Matrix kf = kernel_matrix(data.inputs, hyper.kernel_f);
  const Matrix kg = kernel_matrix(data.inputs, hyper.kernel_g);
  const Matrix lf = jittered_llt(kf, hyper.kernel_f.amplitude * hyper.kernel_f.amplitude)
                        .matrixL();
  const Matrix lg = jittered_llt(kg, hyper.kernel_g.amplitude * hyper.kernel_g.amplitude)
                        .matrixL();

  Rng rng(derive_seed(seed, "evidence"));
  Vector loglik(n_mc);
  Vector zf(n), zg(n);
  const double log2pi = std::log(2.0 * M_PI);
  for (Index j = 0; j < n_mc; ++j) {
    for (Index i = 0; i < n; ++i) zf[i] = rng.normal();
    for (Index i = 0; i < n; ++i) zg[i] = rng.normal();
    const Vector f = lf * zf;
    const Vector g = (lg * zg).array() + hyper.mu0;
    double ll = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double r = data.outputs[i] - f[i];
      ll += -0.5 * (log2pi + g[i] + r * r * std::exp(-g[i]));
    }
    loglik[j] = ll;
  }

  // log-mean-exp with a delta-method error bar on the log scale.
  const double shift = loglik.maxCoeff();
  const Vector w = (loglik.array() - shift).exp();
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / static_cast<double>(n_mc - 1);
  LogEvidenceEstimate est;
  est.value = shift + std::log(mean);
  est.ci = std::sqrt(var / static_cast<double>(n_mc)) / mean;
  est.n_mc = n_mc;
  return est;
}

McEstimate ship_exact(const WaveField& field, const std::vector<WaveGroup>& catalog,
                      const RollParams& params, double delta, bool use_abs,
                      int substeps_override) {
  const Index m = field.eta.size();
  const size_t n = catalog.size();
  if (n == 0) throw std::invalid_argument("ship_exact: empty catalog");
  const Index first =
      static_cast<Index>(std::llround(catalog.front().t_start / field.dt));
  const Index last =
      static_cast<Index>(std::llround(catalog.back().t_end / field.dt));
  if (first != 0 || last != m - 1)
    throw std::invalid_argument("ship_exact: catalog does not tile the record");

  std::vector<Index> starts(n), ends(n);
  for (size_t g = 0; g < n; ++g) {
    starts[g] = static_cast<Index>(std::llround(catalog[g].t_start / field.dt));
    ends[g] = static_cast<Index>(std::llround(catalog[g].t_end / field.dt));
  }

  const int substeps =
      substeps_override > 0
          ? substeps_override
          : std::max(1, static_cast<int>(
                            std::ceil(100.0 * field.dt / field.peak_period)));
  const double cap = params.beta2 < 0.0
                         ? std::sqrt(-params.beta1 / params.beta2)
                         : std::numeric_limits<double>::infinity();

  std::vector<double> gmax(n, -std::numeric_limits<double>::infinity());
  // Clamped to the segment: a capsize prefix ends mid-window, and the group
  // it stops in must only contribute the samples the segment actually holds.
  auto scan = [&](const Vector& xi, Index offset) {
    const Index hi = offset + xi.size() - 1;
    for (size_t g = 0; g < n; ++g) {
      if (ends[g] < offset) continue;
      if (starts[g] > hi) break;
      for (Index i = std::max(starts[g], offset); i <= std::min(ends[g], hi);
           ++i) {
        const double v = use_abs ? std::abs(xi[i - offset]) : xi[i - offset];
        gmax[g] = std::max(gmax[g], v);
      }
    }
  };

  // Sweep the record from rest; a capsize caps the window it lands in and
  // restarts the ship from rest at that window's end. The finite prefix is
  // re-integrated (deterministically identical) to recover its maxima.
  Index cur = 0;
  while (cur + 1 <= last) {
    try {
      const Vector xi =
          roll_simulate(field.eta.segment(cur, last - cur + 1), field.dt, 0.0, 0.0,
                        params, substeps);
      scan(xi, cur);
      break;
    } catch (const RollBlowup& e) {
      const Index blow = cur + static_cast<Index>(std::llround(e.time / field.dt));
      size_t gb = n - 1;
      for (size_t g = 0; g < n; ++g)
        if (blow <= ends[g]) {
          gb = g;
          break;
        }
      if (starts[gb] > cur + 1) {
        const Vector prefix =
            roll_simulate(field.eta.segment(cur, starts[gb] - cur + 1), field.dt,
                          0.0, 0.0, params, substeps);
        scan(prefix, cur);
      }
      gmax[gb] = cap;
      cur = ends[gb];
      if (gb + 1 == n) break;
    }
  }

  Index count = 0;
  for (size_t g = 0; g < n; ++g)
    if (gmax[g] > delta) ++count;
  McEstimate est;
  est.value = static_cast<double>(count) / static_cast<double>(n);
  est.std_error = std::sqrt(est.value * (1.0 - est.value) / static_cast<double>(n));
  est.n_samples = static_cast<Index>(n);
  est.seed = 0;
  return est;
}

}  // namespace stochbed
