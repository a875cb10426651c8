#pragma once

// Experiment engine: builds games from textual specs, plays seeded runs,
// aggregates Monte Carlo regret against the regret bound, and runs the
// randomized verification suites.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tsg/adversaries.hpp"
#include "tsg/analysis.hpp"
#include "tsg/core.hpp"
#include "tsg/policies.hpp"
#include "tsg/random.hpp"

namespace tsg {

namespace detail {

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = text.find(sep, pos);
    parts.push_back(text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return parts;
}

inline std::size_t parse_count(std::string_view text, const char* what) {
  std::size_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || end != text.data() + text.size()) {
    throw InvalidInput(std::string(what) + ": expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return value;
}

/// "kind:arg1;arg2;key=value" → kind, positional args, options.
struct SpecParts {
  std::string kind;
  std::vector<std::string> args;
  std::map<std::string, std::string> options;
};

inline SpecParts split_spec(std::string_view text) {
  SpecParts parts;
  const auto colon = text.find(':');
  parts.kind = std::string(text.substr(0, colon));
  if (colon == std::string_view::npos) return parts;
  for (auto item : split(text.substr(colon + 1), ';')) {
    const auto eq = item.find('=');
    if (eq != std::string_view::npos) {
      parts.options.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
    } else {
      parts.args.emplace_back(item);
    }
  }
  return parts;
}

}  // namespace detail

/// Decision-set specs: "basis:N", "hypercube:N", "vertices:1,0;0,1", "file:path".
inline DecisionSet parse_decisions(std::string_view text) {
  const auto spec = detail::split_spec(text);
  if (spec.kind == "basis" || spec.kind == "hypercube") {
    if (spec.args.size() != 1) throw InvalidInput("decisions '" + std::string(text) + "': expected one dimension");
    const auto n = detail::parse_count(spec.args[0], "decisions");
    return spec.kind == "basis" ? DecisionSet::basis(n) : DecisionSet::hypercube(n);
  }
  if (spec.kind == "vertices") {
    std::vector<Vector> vertices;
    for (const auto& row : spec.args) vertices.push_back(parse_csv_row(row));
    return DecisionSet::finite(std::move(vertices));
  }
  if (spec.kind == "file") {
    if (spec.args.size() != 1) throw InvalidInput("decisions: file spec needs a path");
    std::vector<Vector> vertices;
    for (auto& s : load_state_file(spec.args[0])) vertices.push_back(s.coords());
    return DecisionSet::finite(std::move(vertices));
  }
  throw InvalidInput("unknown decision set '" + std::string(text) + "'");
}

/// Adversary specs: "constant:1,0", "uniform[:lo,hi][;seed=S]",
/// "alternating:1,0;0,1[;phase=1]", "file:path". A uniform adversary without
/// an explicit seed uses `default_seed`.
inline Adversary parse_adversary(std::string_view text, std::size_t n, std::uint64_t default_seed) {
  const auto spec = detail::split_spec(text);
  auto vector_arg = [&](std::size_t i) {
    Vector v = parse_csv_row(spec.args.at(i));
    require_dimension(n, v.size(), "adversary");
    return v;
  };
  if (spec.kind == "constant") {
    if (spec.args.size() != 1) throw InvalidInput("constant adversary needs one vector");
    return Adversary::constant(vector_arg(0));
  }
  if (spec.kind == "uniform") {
    double lo = 0.0, hi = 1.0;
    if (!spec.args.empty()) {
      const Vector range = parse_csv_row(spec.args[0]);
      if (range.size() != 2) throw InvalidInput("uniform adversary: range must be lo,hi");
      lo = range[0];
      hi = range[1];
    }
    std::uint64_t seed = default_seed;
    if (auto it = spec.options.find("seed"); it != spec.options.end()) {
      seed = detail::parse_count(it->second, "uniform seed");
    }
    return Adversary::iid_uniform(n, lo, hi, seed);
  }
  if (spec.kind == "alternating") {
    if (spec.args.size() != 2) throw InvalidInput("alternating adversary needs two vectors");
    int phase = 0;
    if (auto it = spec.options.find("phase"); it != spec.options.end()) {
      phase = static_cast<int>(detail::parse_count(it->second, "alternating phase"));
    }
    return Adversary::alternating(vector_arg(0), vector_arg(1), phase);
  }
  if (spec.kind == "file") {
    if (spec.args.size() != 1) throw InvalidInput("file adversary needs a path");
    auto adv = Adversary::from_file(spec.args[0]);
    require_dimension(n, adv.dimension(), "file adversary");
    return adv;
  }
  throw InvalidInput("unknown adversary '" + std::string(text) + "'");
}

struct ExperimentSpec {
  std::string decisions = "basis:2";
  std::string adversary = "uniform:0,1";
  PolicyKind policy = PolicyKind::TsgPerturbation;
  std::optional<double> epsilon;  // empty means 1/T
  std::size_t horizon = 100;
  std::size_t runs = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // scheduling only; never affects results
  std::string out_dir;

  double resolved_epsilon() const { return epsilon ? *epsilon : epsilon_star(horizon); }

  void validate() const {
    if (horizon < 1) throw InvalidInput("horizon must be >= 1");
    if (runs < 1) throw InvalidInput("runs must be >= 1");
    if (epsilon && !(*epsilon > 0.0 && std::isfinite(*epsilon))) throw InvalidInput("epsilon must be positive");
  }
};

/// A resolved spec: concrete decision set and adversary.
struct Game {
  DecisionSet decisions;
  Adversary adversary;

  static Game from_spec(const ExperimentSpec& spec) {
    spec.validate();
    auto set = parse_decisions(spec.decisions);
    auto adv = parse_adversary(spec.adversary, set.dimension(), spec.seed);
    return {std::move(set), std::move(adv)};
  }
};

inline std::uint64_t run_seed(std::uint64_t master_seed, std::uint64_t run_index) {
  return derive_key(master_seed, 0x52554eULL, run_index);
}

/// Thrown when one Monte Carlo run fails; wraps the original message.
struct RunFailure : std::runtime_error {
  RunFailure(std::uint64_t run, const std::string& what)
      : std::runtime_error("run " + std::to_string(run) + ": " + what), run_index(run) {}
  std::uint64_t run_index;
};

inline GameTrace run_game(const ExperimentSpec& spec, const Game& game, std::uint64_t run_index) {
  const auto& set = game.decisions;
  const std::size_t n = set.dimension();
  require_dimension(n, game.adversary.dimension(), "run_game adversary");

  GameTrace trace;
  trace.horizon = spec.horizon;
  trace.run_index = run_index;
  trace.seed = run_seed(spec.seed, run_index);
  trace.records.reserve(spec.horizon);
  trace.final_state = CumulativeState(n);

  Policy policy(spec.policy, n, PerturbationSchedule(spec.resolved_epsilon()),
                NoiseStream(trace.seed, run_index));
  for (std::size_t t = 1; t <= spec.horizon; ++t) {
    const auto decision = policy.step(set, t);
    StateVector state = game.adversary.next_state(t);
    const auto [lo, hi] = set.reward_range(state.coords());
    if (lo < 0.0) trace.nonneg_violation = true;
    RoundRecord rec;
    rec.t = t;
    rec.noise = policy.last_noise();
    rec.decision = decision;
    rec.reward = set.reward(decision, state.coords());
    rec.state = state.coords();
    policy.observe(state);
    trace.final_state.add(state);
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

inline GameTrace run_game(const ExperimentSpec& spec, std::uint64_t run_index) {
  return run_game(spec, Game::from_spec(spec), run_index);
}

/// K_{∞,n} used in bound checks: 10⁶ samples, seed 0, cached per n.
inline ConstantEstimate canonical_kinf(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, ConstantEstimate> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(n); it != cache.end()) return it->second;
  const auto est = k_pn(NormKind::Infinity, n, MonteCarlo{1000000, 0, 1});
  cache.emplace(n, est);
  return est;
}

struct BoundEvaluation {
  GameParams params;
  BoundInputs inputs;
  ConstantEstimate k2;
  ConstantEstimate kinf;
  double value = 0.0;
};

/// Bound for a spec, with R, A2, D taken from the realized state sequence.
inline BoundEvaluation evaluate_bound(const ExperimentSpec& spec, const Game& game) {
  BoundEvaluation b;
  const auto states = game.adversary.sequence(spec.horizon);
  b.params = params_from_instance(game.decisions, states);
  b.k2 = k_pn(NormKind::Two, b.params.n, ClosedForm{});
  b.kinf = canonical_kinf(b.params.n);
  b.inputs = {spec.resolved_epsilon(), static_cast<double>(spec.horizon), b.params.R, b.params.A2,
              b.params.D, b.k2.value, b.kinf.value};
  b.value = regret_bound(b.inputs);
  return b;
}

struct RegretReport {
  std::vector<double> per_run;
  double mean = 0.0;
  double standard_error = 0.0;
  std::optional<BoundEvaluation> bound;  // present for TSG policies
  bool bound_satisfied = false;
  std::size_t nonneg_violations = 0;
};

inline RegretReport summarize(std::vector<double> regrets) {
  RegretReport r;
  r.per_run = std::move(regrets);
  double sum = 0.0;
  for (double v : r.per_run) sum += v;
  const double k = static_cast<double>(r.per_run.size());
  r.mean = sum / k;
  if (r.per_run.size() > 1) {
    double ss = 0.0;
    for (double v : r.per_run) ss += (v - r.mean) * (v - r.mean);
    r.standard_error = std::sqrt(ss / (k - 1.0) / k);
  }
  return r;
}

/// Called once per finished run, possibly from a worker thread.
using TraceSink = std::function<void(const DecisionSet&, const GameTrace&)>;

inline RegretReport monte_carlo(const ExperimentSpec& spec, const TraceSink& sink = {}) {
  const Game game = Game::from_spec(spec);
  std::vector<double> regrets(spec.runs, 0.0);
  std::vector<char> violations(spec.runs, 0);
  std::vector<std::exception_ptr> errors(spec.runs);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t run = next++; run < spec.runs; run = next++) {
      try {
        const auto trace = run_game(spec, game, run);
        regrets[run] = compute_regret(game.decisions, trace);
        violations[run] = trace.nonneg_violation;
        if (sink) sink(game.decisions, trace);
      } catch (...) {
        errors[run] = std::current_exception();
      }
    }
  };
  const unsigned workers = std::max(1U, std::min<unsigned>(spec.threads, static_cast<unsigned>(spec.runs)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (std::size_t run = 0; run < spec.runs; ++run) {
    if (!errors[run]) continue;
    try {
      std::rethrow_exception(errors[run]);
    } catch (const std::exception& e) {
      throw RunFailure(run, e.what());
    }
  }

  auto report = summarize(std::move(regrets));
  for (char v : violations) report.nonneg_violations += v ? 1 : 0;
  if (is_tsg(spec.policy)) {
    report.bound = evaluate_bound(spec, game);
    report.bound_satisfied = report.mean + 2.0 * report.standard_error <= report.bound->value;
  }
  return report;
}

/// Least-squares slope of log(y) against log(x); NaN when any y ≤ 0.
inline double log_log_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw InvalidInput("log_log_slope: need two or more points");
  double mx = 0.0, my = 0.0;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) return std::nan("");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
    mx += lx.back();
    my += ly.back();
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

struct SweepPoint {
  std::size_t horizon = 0;
  double epsilon = 0.0;
  RegretReport report;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::optional<double> slope;  // only when ε follows 1/T and there are ≥ 2 horizons
};

/// Grid over horizons × epsilons. An empty epsilon list means ε = 1/T.
inline SweepResult sweep(const ExperimentSpec& base, const std::vector<std::size_t>& horizons,
                         const std::vector<double>& epsilons) {
  if (horizons.empty()) throw InvalidInput("sweep: no horizons");
  SweepResult result;
  std::vector<std::optional<double>> grid;
  if (epsilons.empty()) grid.emplace_back();
  for (double e : epsilons) grid.emplace_back(e);
  for (const auto& eps : grid) {
    for (std::size_t horizon : horizons) {
      ExperimentSpec spec = base;
      spec.horizon = horizon;
      spec.epsilon = eps;
      result.points.push_back({horizon, spec.resolved_epsilon(), monte_carlo(spec)});
    }
  }
  if (epsilons.empty() && horizons.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& p : result.points) {
      xs.push_back(static_cast<double>(p.horizon));
      ys.push_back(p.report.mean);
    }
    result.slope = log_log_slope(xs, ys);
  }
  return result;
}

enum class Suite { BeTheLeader, Telescoping, Equivalence, Constants };

inline std::string_view suite_name(Suite s) {
  switch (s) {
    case Suite::BeTheLeader: return "be_the_leader";
    case Suite::Telescoping: return "telescoping";
    case Suite::Equivalence: return "equivalence";
    case Suite::Constants: return "constants";
  }
  return "unknown";
}

inline Suite parse_suite(std::string_view name) {
  for (auto s : {Suite::BeTheLeader, Suite::Telescoping, Suite::Equivalence, Suite::Constants}) {
    if (suite_name(s) == name) return s;
  }
  throw InvalidInput("unknown verification suite '" + std::string(name) + "'");
}

struct VerifySummary {
  Suite suite = Suite::BeTheLeader;
  std::size_t trials = 0;
  std::size_t passed = 0;
  std::size_t failed = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  double worst_deviation = 0.0;            // equivalence: max relative coordinate deviation
  std::vector<std::string> failure_details;  // first few failing instances
};

namespace detail {

inline DecisionSet random_decision_set(KeyedStream& rng, std::size_t n) {
  switch (rng.next_u64() % 3) {
    case 0: return DecisionSet::basis(n);
    case 1: return DecisionSet::hypercube(n);
    default: {
      const std::size_t m = 1 + rng.next_u64() % 16;
      std::vector<Vector> vertices;
      for (std::size_t i = 0; i < m; ++i) {
        Vector v(n);
        for (auto& x : v) x = rng.uniform(-1.0, 1.0);
        vertices.push_back(std::move(v));
      }
      return DecisionSet::finite(std::move(vertices));
    }
  }
}

inline std::string describe(std::span<const double> v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out + "]";
}

struct EquivalenceOutcome {
  double deviation = 0.0;
  bool same_decision = true;
};

/// Posterior sample rescaled by c_t versus the perturbed state, on one instance.
inline EquivalenceOutcome equivalence_trial(const DecisionSet& set, const PerturbationSchedule& schedule,
                                            std::size_t t, const CumulativeState& previous,
                                            std::span<const double> z) {
  const auto theta = tsg_sample_theta(tsg_posterior_params(schedule, t, previous), z);
  const auto perturbed = tsg_perturbed_state(schedule, t, previous, z);
  const double k = static_cast<double>(t - 1);
  const double c = k + 1.0 / k;
  const double sd = std::sqrt(schedule.variance(t));
  EquivalenceOutcome out;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double scale = std::max({std::abs(previous.coords()[i]), std::abs(sd * z[i]), 1e-300});
    out.deviation = std::max(out.deviation, std::abs(c * theta[i] - perturbed[i]) / scale);
  }
  out.same_decision = set.argmax(theta) == set.argmax(perturbed);
  return out;
}

}  // namespace detail

/// Runs `trials` randomized instances of one property suite.
inline VerifySummary verify(Suite suite, std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw InvalidInput("verify: trials must be >= 1");
  VerifySummary summary;
  summary.suite = suite;
  summary.trials = trials;
  auto record = [&](bool ok, double slack, std::string detail) {
    summary.worst_slack = std::min(summary.worst_slack, slack);
    if (ok) {
      ++summary.passed;
    } else {
      ++summary.failed;
      if (summary.failure_details.size() < 5) summary.failure_details.push_back(std::move(detail));
    }
  };

  for (std::size_t trial = 0; trial < trials; ++trial) {
    KeyedStream rng(derive_key(seed, static_cast<std::uint64_t>(suite), trial));
    switch (suite) {
      case Suite::BeTheLeader: {
        const std::size_t n = 1 + rng.next_u64() % 5;
        const std::size_t horizon = 1 + rng.next_u64() % 100;
        const auto set = detail::random_decision_set(rng, n);
        const double noise_scale = std::exp(rng.uniform(std::log(1e-3), std::log(1e2)));
        std::vector<StateVector> states;
        std::vector<Vector> perturbations;
        for (std::size_t t = 0; t < horizon; ++t) {
          Vector s(n), p(n);
          for (auto& x : s) x = rng.uniform(-1.0, 1.0);
          for (auto& x : p) x = noise_scale * rng.normal();
          states.emplace_back(std::move(s));
          perturbations.push_back(std::move(p));
        }
        const auto rep = check_be_the_leader(set, states, perturbations);
        record(rep.holds, rep.slack,
               "trial " + std::to_string(trial) + ": n=" + std::to_string(n) + " T=" + std::to_string(horizon) +
                   " lhs=" + std::to_string(rep.lhs) + " rhs=" + std::to_string(rep.rhs));
        break;
      }
      case Suite::Telescoping: {
        const std::size_t n = 1 + rng.next_u64() % 8;
        const std::size_t horizon = 2 + rng.next_u64() % 9999;
        const double scale = std::exp(rng.uniform(std::log(1e-3), std::log(1e3)));
        Vector p1(n);
        for (auto& x : p1) x = scale * rng.normal();
        const auto rep = check_noise_telescoping(p1, horizon);
        const bool exact = rep.lhs <= rep.rhs;
        record(rep.holds && exact, rep.slack,
               "trial " + std::to_string(trial) + ": p1=" + detail::describe(p1) + " T=" + std::to_string(horizon));
        break;
      }
      case Suite::Equivalence: {
        const std::size_t n = 1 + rng.next_u64() % 8;
        const std::size_t t = 2 + rng.next_u64() % 9999;
        const double eps = std::exp(rng.uniform(std::log(1e-4), std::log(10.0)));
        const auto set = detail::random_decision_set(rng, n);
        const PerturbationSchedule schedule(eps);
        CumulativeState previous(n);
        Vector mean(n);
        for (auto& m : mean) m = rng.uniform(-1.0, 1.0);
        for (std::size_t r = 0; r + 1 < t; ++r) {
          Vector s(n);
          for (std::size_t i = 0; i < n; ++i) s[i] = mean[i] + rng.uniform(-1.0, 1.0);
          previous.add(StateVector(std::move(s)));
        }
        const auto z = rng.normal_vector(n);
        const auto out = detail::equivalence_trial(set, schedule, t, previous, z);
        summary.worst_deviation = std::max(summary.worst_deviation, out.deviation);
        const bool ok = out.deviation <= 1e-9 && out.same_decision;
        record(ok, 1e-9 - out.deviation,
               "trial " + std::to_string(trial) + ": eps=" + std::to_string(eps) + " t=" + std::to_string(t) +
                   " S=" + detail::describe(previous.coords()) + " z=" + detail::describe(z));
        break;
      }
      case Suite::Constants: {
        const std::size_t n = 1 + rng.next_u64() % 10;
        const MonteCarlo mc{10000, rng.next_u64(), 1};
        const double closed = k2n_closed_form(n);
        const auto two = k_pn(NormKind::Two, n, mc);
        const auto inf = k_pn(NormKind::Infinity, n, mc);
        const double tolerance = 5.0 * two.standard_error;
        const double slack = std::min({std::sqrt(static_cast<double>(n)) - closed,
                                       tolerance - std::abs(two.value - closed), two.value - inf.value});
        // Same samples for both norms, so ‖z‖_∞ ≤ ‖z‖₂ holds pathwise.
        const bool ok = closed > 0.0 && closed <= std::sqrt(static_cast<double>(n)) &&
                        std::abs(two.value - closed) <= tolerance && inf.value <= two.value;
        record(ok, slack,
               "trial " + std::to_string(trial) + ": n=" + std::to_string(n) + " closed=" + std::to_string(closed) +
                   " mc=" + std::to_string(two.value) + " se=" + std::to_string(two.standard_error));
        break;
      }
    }
  }
  return summary;
}

}  // namespace tsg
