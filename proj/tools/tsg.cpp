// Command-line front end: run, sweep, verify, constants, bound.
//
// Exit codes: 0 success, 1 usage/config error, 2 verification failure,
// 3 runtime failure.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tsg/report_io.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kVerificationFailure = 2;
constexpr int kRuntimeFailure = 3;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> horizon;
  std::optional<std::string> epsilon;
  std::optional<std::string> policy;
  std::optional<std::string> adversary;
  std::optional<std::string> decisions;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment file");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--runs", f.runs, "Monte Carlo runs");
  cmd->add_option("--horizon", f.horizon, "horizon T");
  cmd->add_option("--epsilon", f.epsilon, "prior precision, or 'auto' for 1/T");
  cmd->add_option("--policy", f.policy, "tsg-posterior|tsg-perturb|tsg-coupled|fpl-exp|ftl");
  cmd->add_option("--adversary", f.adversary, "constant:..|uniform[:lo,hi][;seed=S]|alternating:u;v[;phase=1]|file:path");
  cmd->add_option("--decisions", f.decisions, "basis:N|hypercube:N|vertices:v1;v2;..|file:path");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--threads", f.threads, "worker threads");
}

tsg::ExperimentConfig resolve(const CommonFlags& f) {
  tsg::ExperimentConfig cfg;
  if (!f.config.empty()) cfg = tsg::load_config(f.config);
  auto& s = cfg.spec;
  if (f.seed) s.seed = *f.seed;
  if (f.runs) s.runs = *f.runs;
  if (f.horizon) s.horizon = *f.horizon;
  if (f.epsilon) s.epsilon = tsg::parse_epsilon(*f.epsilon);
  if (f.policy) s.policy = tsg::parse_policy(*f.policy);
  if (f.adversary) s.adversary = *f.adversary;
  if (f.decisions) s.decisions = *f.decisions;
  if (f.out) s.out_dir = *f.out;
  if (f.threads) s.threads = *f.threads;
  s.validate();
  return cfg;
}

int cmd_run(const CommonFlags& flags) {
  const auto cfg = resolve(flags);
  tsg::RegretReport report;
  try {
    report = tsg::run_experiment(cfg.spec);
  } catch (const tsg::RunFailure&) {
    std::cerr << "partial results in " << cfg.spec.out_dir << '\n';
    throw;
  }
  std::cout << "mean regret " << report.mean << " (s.e. " << report.standard_error << ") over "
            << cfg.spec.runs << " runs\n";
  if (report.bound) {
    std::cout << "bound " << report.bound->value << (report.bound_satisfied ? " satisfied" : " NOT satisfied")
              << '\n';
  }
  if (report.nonneg_violations > 0) {
    std::cout << "warning: " << report.nonneg_violations << " runs saw states with negative rewards\n";
  }
  std::cout << "outputs in " << cfg.spec.out_dir << '\n';
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::vector<std::size_t>& horizons,
              const std::vector<double>& epsilons) {
  auto cfg = resolve(flags);
  if (!horizons.empty()) cfg.horizons = horizons;
  if (!epsilons.empty()) cfg.epsilons = epsilons;
  if (cfg.horizons.empty()) cfg.horizons = {cfg.spec.horizon};
  const auto result = tsg::sweep(cfg.spec, cfg.horizons, cfg.epsilons);

  std::cout << "horizon,epsilon,mean_regret,standard_error,bound\n";
  std::string csv = "horizon,epsilon,mean_regret,standard_error,bound\n";
  for (const auto& p : result.points) {
    std::string row = std::to_string(p.horizon) + ',' + tsg::format_number(p.epsilon) + ',' +
                      tsg::format_number(p.report.mean) + ',' + tsg::format_number(p.report.standard_error) + ',' +
                      (p.report.bound ? tsg::format_number(p.report.bound->value) : "") + '\n';
    std::cout << row;
    csv += row;
  }
  if (result.slope) std::cout << "log-log slope " << *result.slope << '\n';
  if (!cfg.spec.out_dir.empty()) {
    const std::filesystem::path dir(cfg.spec.out_dir);
    std::filesystem::create_directories(dir);
    tsg::write_text(dir / "sweep.csv", csv);
    tsg::write_text(dir / "sweep.json", tsg::sweep_json(cfg.spec, result).dump(2) + "\n");
  }
  return 0;
}

int cmd_verify(const std::vector<std::string>& suites, std::size_t trials, std::uint64_t seed,
               const std::string& out) {
  bool all_passed = true;
  tsg::Json results = tsg::Json::array();
  for (const auto& name : suites) {
    const auto summary = tsg::verify(tsg::parse_suite(name), trials, seed);
    std::cout << name << ": " << summary.passed << "/" << summary.trials << " passed, worst slack "
              << summary.worst_slack;
    if (summary.suite == tsg::Suite::Equivalence) std::cout << ", worst deviation " << summary.worst_deviation;
    std::cout << '\n';
    for (const auto& d : summary.failure_details) std::cout << "  FAIL " << d << '\n';
    all_passed = all_passed && summary.failed == 0;
    results.push_back(tsg::verify_json(summary));
  }
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    tsg::write_text(std::filesystem::path(out) / "verify.json", results.dump(2) + "\n");
  }
  return all_passed ? 0 : kVerificationFailure;
}

int cmd_constants(const std::string& p, std::size_t n, const std::string& mode, std::uint64_t samples,
                  std::uint64_t seed, unsigned threads) {
  const auto norm = p == "inf" ? tsg::NormKind::Infinity : tsg::NormKind::Two;
  tsg::ConstantMode m = tsg::ClosedForm{};
  if (mode == "mc") m = tsg::MonteCarlo{samples, seed, threads};
  const auto est = tsg::k_pn(norm, n, m);
  std::cout << tsg::constant_json(est).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thompson sampling / Gaussian perturbed-leader experiments"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "single Monte Carlo experiment with trace output");
  add_common(run, run_flags);

  CommonFlags sweep_flags;
  std::vector<std::size_t> sweep_horizons;
  std::vector<double> sweep_epsilons;
  auto* sweep = app.add_subcommand("sweep", "grid over horizons and/or epsilons");
  add_common(sweep, sweep_flags);
  sweep->add_option("--horizons", sweep_horizons, "list of horizons");
  sweep->add_option("--epsilons", sweep_epsilons, "list of epsilons (default 1/T)");

  std::vector<std::string> suites{"be_the_leader", "telescoping", "equivalence", "constants"};
  std::size_t trials = 1000;
  std::uint64_t verify_seed = 0;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "randomized property suites");
  verify->add_option("--suite", suites, "be_the_leader|telescoping|equivalence|constants");
  verify->add_option("--trials", trials, "instances per suite");
  verify->add_option("--seed", verify_seed, "seed");
  verify->add_option("--out", verify_out, "directory for verify.json");

  std::string p = "2";
  std::size_t n = 1;
  std::string mode = "closed";
  std::uint64_t samples = 1000000;
  std::uint64_t const_seed = 0;
  unsigned const_threads = 1;
  auto* constants = app.add_subcommand("constants", "expected Gaussian norms K_{p,n}");
  constants->add_option("--p", p, "2 or inf")->check(CLI::IsMember({"2", "inf"}));
  constants->add_option("--n", n, "dimension")->required();
  constants->add_option("--mode", mode, "closed or mc")->check(CLI::IsMember({"closed", "mc"}));
  constants->add_option("--samples", samples, "Monte Carlo samples");
  constants->add_option("--seed", const_seed, "Monte Carlo seed");
  constants->add_option("--threads", const_threads, "worker threads");

  std::string bound_eps = "auto";
  double bound_T = 1.0, bound_R = 0.0, bound_A2 = 0.0, bound_D = 0.0;
  std::optional<double> bound_K2, bound_Kinf;
  std::size_t bound_n = 1;
  auto* bound = app.add_subcommand("bound", "evaluate the expected-regret bound");
  bound->add_option("--epsilon", bound_eps, "epsilon or 'auto' for 1/T");
  bound->add_option("--horizon", bound_T, "horizon T")->required();
  bound->add_option("--R", bound_R, "max |<d,s>|");
  bound->add_option("--A2", bound_A2, "max l2 norm of states");
  bound->add_option("--D", bound_D, "l1 diameter of the decision set");
  bound->add_option("--n", bound_n, "dimension, used for default K constants");
  bound->add_option("--K2", bound_K2, "K_{2,n} (default: closed form)");
  bound->add_option("--Kinf", bound_Kinf, "K_{inf,n} (default: 10^6-sample Monte Carlo, seed 0)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*sweep) return cmd_sweep(sweep_flags, sweep_horizons, sweep_epsilons);
    if (*verify) return cmd_verify(suites, trials, verify_seed, verify_out);
    if (*constants) return cmd_constants(p, n, mode, samples, const_seed, const_threads);
    if (*bound) {
      tsg::BoundInputs b;
      const auto eps = tsg::parse_epsilon(bound_eps);
      b.T = bound_T;
      b.epsilon = eps ? *eps : 1.0 / bound_T;
      b.R = bound_R;
      b.A2 = bound_A2;
      b.D = bound_D;
      b.K2n = bound_K2 ? *bound_K2 : tsg::k2n_closed_form(bound_n);
      b.Kinfn = bound_Kinf ? *bound_Kinf : tsg::canonical_kinf(bound_n).value;
      std::cout << tsg::format_number(tsg::regret_bound(b)) << '\n';
      return 0;
    }
  } catch (const tsg::RunFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const tsg::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return 0;
}
