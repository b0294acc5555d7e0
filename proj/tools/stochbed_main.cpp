#include <cstdio>
#include <exception>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stochbed/experiment.hpp"

using namespace stochbed;

namespace {

void print_outcome(const ExperimentConfig& cfg, const MethodOutcome& out) {
  const SummaryTable& t = out.summary;
  const double final_median = t.median[t.rows() - 1];
  std::printf("%s / %s: %lld replication(s), %lld+%lld samples each\n",
              cfg.problem.c_str(), cfg.method.c_str(),
              static_cast<long long>(cfg.replications),
              static_cast<long long>(cfg.n_init),
              static_cast<long long>(cfg.n_iter));
  std::printf("  oracle  %.6g (se %.2g)\n", out.oracle.value,
              out.oracle.std_error);
  std::printf("  final   median %.6g  mean %.6g  std %.3g  ratio %.3f\n",
              final_median, t.mean[t.rows() - 1], t.stddev[t.rows() - 1],
              final_median / out.oracle.value);
  std::printf("  wrote   %s/{run-*.csv,summary.csv,manifest.json}\n",
              cfg.out_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "stochbed: sequential Bayesian estimation of exceedance probabilities\n"
      "for stochastic simulators, with replicated seeded experiments."};
  app.set_config("--config", "",
                 "key=value config file; command-line flags take precedence");

  ExperimentConfig cfg;
  app.add_option("--problem", cfg.problem, "Benchmark problem")
      ->check(CLI::IsMember(problem_ids()))
      ->capture_default_str();
  app.add_option("--n-init", cfg.n_init, "Initial design size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--n-iter", cfg.n_iter, "Sequential samples after the initial fit")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--reps", cfg.replications, "Independent replications")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "Master seed; replication r uses seed + r")
      ->capture_default_str();
  app.add_option("--out", cfg.out_dir, "Output directory")
      ->capture_default_str();
  app.add_option("--jobs", cfg.jobs, "Replications to run concurrently")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::map<std::string, std::string> raw;
  for (const auto& key : experiment_override_keys()) {
    if (key == "use-abs") continue;
    app.add_option("--" + key, raw[key],
                   "Override: " + key + " (see README for defaults)");
  }
  bool use_abs = false;
  app.add_flag("--use-abs", use_abs,
               "Ship: count exceedances of |roll| instead of signed roll");

  std::string method = "seq-vhgpr";
  std::vector<std::string> methods = {"seq-vhgpr", "lh-vhgpr", "lh-sgpr"};
  app.add_option("--method", method, "Estimation method (run)")
      ->check(CLI::IsMember(method_ids()))
      ->capture_default_str();
  app.add_option("--methods", methods, "Comma-separated method list (compare)")
      ->delimiter(',')
      ->check(CLI::IsMember(method_ids()))
      ->capture_default_str();

  auto* run = app.add_subcommand("run", "Run one estimation method");
  run->fallthrough();
  auto* cmp = app.add_subcommand(
      "compare", "Run several methods on identical seeds and budgets");
  cmp->fallthrough();
  app.require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  for (const auto& [key, value] : raw)
    if (!value.empty()) cfg.overrides[key] = value;
  if (use_abs) cfg.overrides["use-abs"] = "1";

  try {
    bool any_failed = false;
    if (run->parsed()) {
      cfg.method = method;
      const MethodOutcome out = run_experiment(cfg);
      print_outcome(cfg, out);
      for (Index idx : out.failed) {
        std::fprintf(stderr, "replication %lld failed; see manifest.json\n",
                     static_cast<long long>(idx));
        any_failed = true;
      }
    } else {
      const ComparisonReport rep = compare(methods, cfg);
      for (size_t i = 0; i < rep.methods.size(); ++i) {
        ExperimentConfig echo = cfg;
        echo.method = rep.methods[i];
        echo.out_dir = cfg.out_dir + "/" + rep.methods[i];
        print_outcome(echo, rep.outcomes[i]);
        if (!rep.outcomes[i].failed.empty()) any_failed = true;
      }
      std::printf("wrote %s/compare.csv\n", cfg.out_dir.c_str());
    }
    return any_failed ? 1 : 0;
  } catch (const std::invalid_argument& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
}
