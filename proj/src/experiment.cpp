#include "stochbed/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "stochbed/benchmarks.hpp"

#ifndef STOCHBED_BUILD_ID
#define STOCHBED_BUILD_ID "unknown"
#endif

namespace stochbed {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

double ms_between(std::chrono::steady_clock::time_point a,
                  std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end)
    throw std::invalid_argument("override " + key + ": cannot parse '" + text + "'");
  return value;
}

struct Knobs {
  double hours = 150.0;
  std::uint64_t field_seed = 1;
  Index oracle_samples = 1000000;
  std::uint64_t oracle_seed = 9001;
  Index n_candidates = 10000;
  Index n_quad = 200;
  double delta = 0.0;
  bool has_delta = false;
  bool use_abs = false;
};

Knobs parse_overrides(const std::map<std::string, std::string>& overrides) {
  Knobs k;
  for (const auto& [key, text] : overrides) {
    if (key == "hours") {
      k.hours = parse_number<double>(key, text);
    } else if (key == "field-seed") {
      k.field_seed = parse_number<std::uint64_t>(key, text);
    } else if (key == "oracle-samples") {
      k.oracle_samples = parse_number<Index>(key, text);
    } else if (key == "oracle-seed") {
      k.oracle_seed = parse_number<std::uint64_t>(key, text);
    } else if (key == "n-candidates") {
      k.n_candidates = parse_number<Index>(key, text);
    } else if (key == "n-quad") {
      k.n_quad = parse_number<Index>(key, text);
    } else if (key == "delta") {
      k.delta = parse_number<double>(key, text);
      k.has_delta = true;
    } else if (key == "use-abs") {
      k.use_abs = parse_number<int>(key, text) != 0;
    } else {
      std::string valid;
      for (const auto& v : experiment_override_keys()) valid += " " + v;
      throw std::invalid_argument("unknown override '" + key + "'; valid keys:" + valid);
    }
  }
  return k;
}

std::string joined_ids(const std::vector<std::string>& ids) {
  std::string s;
  for (const auto& id : ids) s += " " + id;
  return s;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Per-iteration statistics over the successful runs' trajectories, each
/// already guaranteed to hold `rows` entries.
SummaryTable summarize(const std::vector<Vector>& trajectories, Index rows,
                       const McEstimate& oracle) {
  SummaryTable t;
  const Index n = static_cast<Index>(trajectories.size());
  t.n_runs = n;
  t.mean.resize(rows);
  t.stddev.resize(rows);
  t.median.resize(rows);
  std::vector<double> col(static_cast<size_t>(n));
  for (Index r = 0; r < rows; ++r) {
    for (Index i = 0; i < n; ++i) col[static_cast<size_t>(i)] = trajectories[i][r];
    const double m = std::accumulate(col.begin(), col.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : col) ss += (v - m) * (v - m);
    t.mean[r] = m;
    t.stddev[r] = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    t.median[r] = median_of(col);
  }
  t.oracle = oracle.value;
  t.oracle_lo = 0.95 * oracle.value;
  t.oracle_hi = 1.05 * oracle.value;
  return t;
}

void write_run_csv(const fs::path& path, const RunRecord& rec, Index d) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "phase,iter";
  for (Index j = 0; j < d; ++j) out << ",x" << j;
  out << ",y,acq_value,pe\n";
  const std::string blanks(static_cast<size_t>(d), ',');  // d empty x fields
  for (Index i = 0; i < rec.init_inputs.rows(); ++i) {
    out << "init," << i + 1;
    for (Index j = 0; j < d; ++j) out << ',' << fmt(rec.init_inputs(i, j));
    out << ',' << fmt(rec.init_outputs[i]) << ",,\n";
  }
  // No fit row when the run died before its first estimate.
  if (!rec.aborted || !rec.steps.empty())
    out << "fit,0," << blanks << ",," << fmt(rec.pe_initial) << "\n";
  for (size_t s = 0; s < rec.steps.size(); ++s) {
    const IterationRow& row = rec.steps[s];
    out << "step," << s + 1;
    for (Index j = 0; j < d; ++j) out << ',' << fmt(row.x[j]);
    out << ',' << fmt(row.y) << ',' << fmt(row.acq_value) << ',' << fmt(row.pe)
        << "\n";
  }
}

void write_summary_csv(const fs::path& path, const SummaryTable& t) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iter,mean,std,median,oracle,oracle_lo,oracle_hi\n";
  for (Index r = 0; r < t.rows(); ++r)
    out << r << ',' << fmt(t.mean[r]) << ',' << fmt(t.stddev[r]) << ','
        << fmt(t.median[r]) << ',' << fmt(t.oracle) << ',' << fmt(t.oracle_lo)
        << ',' << fmt(t.oracle_hi) << "\n";
}

}  // namespace

const std::vector<std::string>& problem_ids() {
  static const std::vector<std::string> ids = {"synthetic1d", "fourbranch2d",
                                               "shiproll"};
  return ids;
}

const std::vector<std::string>& method_ids() {
  static const std::vector<std::string> ids = {"seq-vhgpr", "lh-vhgpr", "lh-sgpr",
                                               "exact-mc"};
  return ids;
}

const std::vector<std::string>& experiment_override_keys() {
  static const std::vector<std::string> keys = {
      "hours",       "field-seed", "oracle-samples", "oracle-seed",
      "n-candidates", "n-quad",    "delta",          "use-abs"};
  return keys;
}

BenchmarkSetup make_benchmark(const std::string& problem_id,
                              const std::map<std::string, std::string>& overrides) {
  const Knobs k = parse_overrides(overrides);
  BenchmarkSetup setup;
  if (problem_id == "synthetic1d") {
    setup.prob = make_synthetic1d();
  } else if (problem_id == "fourbranch2d") {
    setup.prob = make_fourbranch2d();
  } else if (problem_id == "shiproll") {
    SpectrumConfig cfg;
    cfg.duration = k.hours * 3600.0;
    ShipItrConfig itr;
    itr.use_abs = k.use_abs;
    ShipProblem ship = make_shiproll(cfg, k.field_seed, RollParams{}, itr);
    setup.prob = ship.spec;
    if (k.has_delta) setup.prob.delta = k.delta;
    const double delta = setup.prob.delta;
    const bool use_abs = k.use_abs;
    setup.oracle = [ship, delta, use_abs]() {
      return ship_exact(*ship.field, *ship.catalog, RollParams{}, delta, use_abs);
    };
    return setup;
  } else {
    throw std::invalid_argument("unknown problem '" + problem_id +
                                "'; valid problems:" + joined_ids(problem_ids()));
  }
  if (k.has_delta) setup.prob.delta = k.delta;
  const ProblemSpec prob = setup.prob;
  const Index samples = k.oracle_samples;
  const std::uint64_t oseed = k.oracle_seed;
  setup.oracle = [prob, samples, oseed]() { return exact_mc(prob, samples, oseed); };
  return setup;
}

MethodOutcome run_experiment(const ExperimentConfig& cfg) {
  if (cfg.n_init < 1 || cfg.n_iter < 0 || cfg.replications < 1)
    throw std::invalid_argument("run_experiment: counts must be positive");
  if (std::find(method_ids().begin(), method_ids().end(), cfg.method) ==
      method_ids().end())
    throw std::invalid_argument("unknown method '" + cfg.method +
                                "'; valid methods:" + joined_ids(method_ids()));
  const Knobs knobs = parse_overrides(cfg.overrides);
  const BenchmarkSetup bench = make_benchmark(cfg.problem, cfg.overrides);
  const Index d = bench.prob.dim();

  fs::create_directories(cfg.out_dir);
  const auto t0 = std::chrono::steady_clock::now();

  MethodOutcome outcome;
  outcome.oracle = bench.oracle();

  RunConfig rc;
  rc.policy = cfg.method == "seq-vhgpr" ? SamplePolicy::acquisition
                                        : SamplePolicy::latin;
  rc.surrogate = cfg.method == "lh-sgpr" ? SurrogateKind::sgpr
                                         : SurrogateKind::vhgpr;
  rc.n_candidates = knobs.n_candidates;
  rc.n_quad = knobs.n_quad;

  const Index reps = cfg.replications;
  outcome.runs.resize(static_cast<size_t>(reps));
  std::vector<double> wall(static_cast<size_t>(reps), 0.0);

  auto one_run = [&](Index i) {
    const auto r0 = std::chrono::steady_clock::now();
    const std::uint64_t run_seed = cfg.seed + static_cast<std::uint64_t>(i);
    RunRecord rec;
    try {
      if (cfg.method == "exact-mc") {
        const McEstimate est = exact_mc(bench.prob, knobs.oracle_samples, run_seed);
        rec.problem_id = bench.prob.id;
        rec.seed = run_seed;
        rec.pe_initial = est.value;
      } else {
        rec = run_design(bench.prob, cfg.n_init, cfg.n_iter, run_seed, rc);
      }
    } catch (const std::exception& ex) {
      rec.problem_id = bench.prob.id;
      rec.seed = run_seed;
      rec.aborted = true;
      rec.abort_reason = ex.what();
    }
    wall[static_cast<size_t>(i)] = ms_between(r0, std::chrono::steady_clock::now());
    outcome.runs[static_cast<size_t>(i)] = std::move(rec);
  };

  if (cfg.jobs <= 1) {
    for (Index i = 0; i < reps; ++i) one_run(i);
  } else {
    std::atomic<Index> next{0};
    auto worker = [&] {
      while (true) {
        const Index i = next.fetch_add(1);
        if (i >= reps) break;
        one_run(i);
      }
    };
    std::vector<std::thread> pool;
    const int width = static_cast<int>(
        std::min<Index>(reps, static_cast<Index>(cfg.jobs)));
    pool.reserve(static_cast<size_t>(width));
    for (int j = 0; j < width; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // A run counts only if it delivered the full trajectory.
  const Index rows = cfg.n_iter + 1;
  std::vector<Vector> trajectories;
  for (Index i = 0; i < reps; ++i) {
    const RunRecord& rec = outcome.runs[static_cast<size_t>(i)];
    if (rec.aborted) {
      outcome.failed.push_back(i);
      continue;
    }
    if (cfg.method == "exact-mc") {
      trajectories.push_back(Vector::Constant(rows, rec.pe_initial));
    } else if (static_cast<Index>(rec.steps.size()) == cfg.n_iter) {
      trajectories.push_back(rec.pe_trajectory());
    } else {
      outcome.failed.push_back(i);
    }
  }
  for (Index i = 0; i < reps; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "run-%03lld.csv", static_cast<long long>(i));
    write_run_csv(fs::path(cfg.out_dir) / name, outcome.runs[static_cast<size_t>(i)],
                  d);
  }
  if (!trajectories.empty()) {
    outcome.summary = summarize(trajectories, rows, outcome.oracle);
    write_summary_csv(fs::path(cfg.out_dir) / "summary.csv", outcome.summary);
  }

  json manifest;
  manifest["config"] = {
      {"problem", cfg.problem},     {"method", cfg.method},
      {"n_init", cfg.n_init},       {"n_iter", cfg.n_iter},
      {"replications", cfg.replications}, {"seed", cfg.seed},
      {"out_dir", cfg.out_dir},     {"jobs", cfg.jobs},
      {"overrides", cfg.overrides}};
  manifest["build_id"] = STOCHBED_BUILD_ID;
  manifest["oracle"] = {{"value", outcome.oracle.value},
                        {"std_error", outcome.oracle.std_error},
                        {"n_samples", outcome.oracle.n_samples},
                        {"seed", outcome.oracle.seed}};
  json runs = json::array();
  for (Index i = 0; i < reps; ++i) {
    const RunRecord& rec = outcome.runs[static_cast<size_t>(i)];
    json r = {{"index", i},
              {"seed", cfg.seed + static_cast<std::uint64_t>(i)},
              {"status", rec.aborted ? "aborted" : "ok"},
              {"steps", rec.steps.size()},
              {"wall_ms", wall[static_cast<size_t>(i)]}};
    if (rec.aborted) r["reason"] = rec.abort_reason;
    runs.push_back(std::move(r));
  }
  manifest["runs"] = std::move(runs);
  manifest["failed"] = outcome.failed;
  manifest["wall_ms_total"] = ms_between(t0, std::chrono::steady_clock::now());
  std::ofstream(fs::path(cfg.out_dir) / "manifest.json", std::ios::trunc)
      << manifest.dump(2) << "\n";

  if (trajectories.empty())
    throw std::runtime_error(
        "run_experiment: every replication failed; see manifest.json in " +
        cfg.out_dir);
  return outcome;
}

ComparisonReport compare(const std::vector<std::string>& methods,
                         const ExperimentConfig& base) {
  if (methods.empty())
    throw std::invalid_argument("compare: need at least one method");
  ComparisonReport rep;
  rep.methods = methods;
  for (const auto& m : methods) {
    ExperimentConfig cfg = base;
    cfg.method = m;
    cfg.out_dir = (fs::path(base.out_dir) / m).string();
    rep.outcomes.push_back(run_experiment(cfg));
    const SummaryTable& t = rep.outcomes.back().summary;
    rep.final_median.push_back(t.median[t.rows() - 1]);
    rep.final_std.push_back(t.stddev[t.rows() - 1]);
  }
  rep.oracle = rep.outcomes.front().oracle.value;
  for (double m : rep.final_median) rep.ratio_to_oracle.push_back(m / rep.oracle);

  std::ofstream out(fs::path(base.out_dir) / "compare.csv", std::ios::trunc);
  if (!out) throw std::runtime_error("compare: cannot write compare.csv");
  out << "method,final_median,final_std,oracle,ratio_to_oracle\n";
  for (size_t i = 0; i < methods.size(); ++i)
    out << methods[i] << ',' << fmt(rep.final_median[i]) << ','
        << fmt(rep.final_std[i]) << ',' << fmt(rep.oracle) << ','
        << fmt(rep.ratio_to_oracle[i]) << "\n";
  return rep;
}

}  // namespace stochbed
