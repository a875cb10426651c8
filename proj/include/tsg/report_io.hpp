#pragma once

// Persistence for experiments: per-run trace CSVs, JSON summaries, and the
// JSON experiment configuration file.

#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsg/harness.hpp"

namespace tsg {

using Json = nlohmann::ordered_json;

/// Shortest decimal that round-trips to the same double.
inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ec == std::errc{} ? end : buf.data());
}

/// t, s_1..s_n, decision, reward, cumulative_reward, p_1..p_n
inline std::string trace_csv_header(std::size_t n) {
  std::string h = "t";
  for (std::size_t i = 1; i <= n; ++i) h += ",s_" + std::to_string(i);
  h += ",decision,reward,cumulative_reward";
  for (std::size_t i = 1; i <= n; ++i) h += ",p_" + std::to_string(i);
  return h;
}

inline void write_trace_csv(std::ostream& out, const GameTrace& trace) {
  const std::size_t n = trace.final_state.dimension();
  out << trace_csv_header(n) << '\n';
  double cumulative = 0.0;
  for (const auto& r : trace.records) {
    cumulative += r.reward;
    out << r.t;
    for (double s : r.state) out << ',' << format_number(s);
    out << ',' << r.decision << ',' << format_number(r.reward) << ',' << format_number(cumulative);
    for (double p : r.noise) out << ',' << format_number(p);
    out << '\n';
  }
}

inline std::string trace_csv(const GameTrace& trace) {
  std::ostringstream out;
  write_trace_csv(out, trace);
  return out.str();
}

inline Json spec_json(const ExperimentSpec& spec) {
  Json j;
  j["decisions"] = spec.decisions;
  j["adversary"] = spec.adversary;
  j["policy"] = std::string(policy_name(spec.policy));
  if (spec.epsilon) {
    j["epsilon"] = *spec.epsilon;
  } else {
    j["epsilon"] = "auto";
  }
  j["resolved_epsilon"] = spec.resolved_epsilon();
  j["horizon"] = spec.horizon;
  j["runs"] = spec.runs;
  j["seed"] = spec.seed;
  return j;
}

inline Json constant_json(const ConstantEstimate& c) {
  Json j;
  j["value"] = c.value;
  if (c.closed_form) {
    j["provenance"] = "closed_form";
  } else {
    j["provenance"] = "monte_carlo";
    j["standard_error"] = c.standard_error;
    j["samples"] = c.samples;
    j["seed"] = c.seed;
  }
  return j;
}

inline Json bound_json(const BoundEvaluation& b) {
  Json j;
  j["params"] = {{"n", b.params.n},   {"D", b.params.D},   {"R", b.params.R},
                 {"A1", b.params.A1}, {"A2", b.params.A2}, {"nonneg_rewards", b.params.nonneg_rewards}};
  j["inputs"] = {{"epsilon", b.inputs.epsilon}, {"T", b.inputs.T},     {"R", b.inputs.R},
                 {"A2", b.inputs.A2},           {"D", b.inputs.D},     {"K2n", b.inputs.K2n},
                 {"Kinfn", b.inputs.Kinfn}};
  j["constants"] = {{"K2n", constant_json(b.k2)}, {"Kinfn", constant_json(b.kinf)}};
  j["value"] = b.value;
  return j;
}

inline Json report_json(const RegretReport& r) {
  Json j;
  j["per_run_regrets"] = r.per_run;
  j["mean_regret"] = r.mean;
  j["standard_error"] = r.standard_error;
  if (r.bound) {
    j["bound"] = bound_json(*r.bound);
    j["bound_satisfied"] = r.bound_satisfied;
  } else {
    j["bound"] = nullptr;
  }
  j["nonneg_violation_runs"] = r.nonneg_violations;
  return j;
}

inline Json summary_json(const ExperimentSpec& spec, const RegretReport& r) {
  Json j;
  j["spec"] = spec_json(spec);
  Json seeds = Json::array();
  for (std::size_t run = 0; run < spec.runs; ++run) seeds.push_back(run_seed(spec.seed, run));
  j["run_seeds"] = seeds;
  j["report"] = report_json(r);
  return j;
}

inline Json sweep_json(const ExperimentSpec& base, const SweepResult& s) {
  Json j;
  j["spec"] = spec_json(base);
  Json points = Json::array();
  for (const auto& p : s.points) {
    Json pj;
    pj["horizon"] = p.horizon;
    pj["epsilon"] = p.epsilon;
    pj["mean_regret"] = p.report.mean;
    pj["standard_error"] = p.report.standard_error;
    if (p.report.bound) {
      pj["bound"] = p.report.bound->value;
      pj["bound_satisfied"] = p.report.bound_satisfied;
    }
    points.push_back(std::move(pj));
  }
  j["points"] = points;
  if (s.slope) {
    j["log_log_slope"] = *s.slope;
  } else {
    j["log_log_slope"] = nullptr;
  }
  return j;
}

inline Json verify_json(const VerifySummary& v) {
  Json j;
  j["suite"] = std::string(suite_name(v.suite));
  j["trials"] = v.trials;
  j["passed"] = v.passed;
  j["failed"] = v.failed;
  j["worst_slack"] = v.worst_slack;
  if (v.suite == Suite::Equivalence) j["worst_relative_deviation"] = v.worst_deviation;
  j["failures"] = v.failure_details;
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

inline std::string run_file_name(std::uint64_t run_index) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "run_%06llu.csv", static_cast<unsigned long long>(run_index));
  return buf.data();
}

/// Runs the experiment, writing run_NNNNNN.csv per run and summary.json into spec.out_dir.
inline RegretReport run_experiment(const ExperimentSpec& spec) {
  if (spec.out_dir.empty()) throw InvalidInput("run: output directory required");
  const std::filesystem::path dir(spec.out_dir);
  std::filesystem::create_directories(dir);
  auto report = monte_carlo(spec, [&](const DecisionSet&, const GameTrace& trace) {
    write_text(dir / run_file_name(trace.run_index), trace_csv(trace));
  });
  write_text(dir / "summary.json", summary_json(spec, report).dump(2) + "\n");
  return report;
}

/// Contents of a JSON experiment file.
struct ExperimentConfig {
  ExperimentSpec spec;
  std::vector<std::size_t> horizons;
  std::vector<double> epsilons;
};

namespace detail {

inline void reject_unknown(const Json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ParseError("config: unknown key '" + where + key + "'");
  }
}

}  // namespace detail

inline std::optional<double> parse_epsilon(const std::string& text) {
  if (text == "auto") return std::nullopt;
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || end != text.data() + text.size() || !(v > 0.0)) {
    throw InvalidInput("epsilon must be a positive number or 'auto', got '" + text + "'");
  }
  return v;
}

/// Nested layout:
///   { "game": {"decisions", "adversary"},
///     "policy": {"kind", "epsilon"},
///     "experiment": {"horizon", "runs", "seed", "threads", "out"},
///     "sweep": {"horizons", "epsilons"} }
inline ExperimentConfig parse_config(const Json& root) {
  ExperimentConfig cfg;
  if (!root.is_object()) throw ParseError("config: top level must be an object");
  try {
    detail::reject_unknown(root, {"game", "policy", "experiment", "sweep"}, "");
    if (root.contains("game")) {
      const auto& g = root.at("game");
      detail::reject_unknown(g, {"decisions", "adversary"}, "game.");
      if (g.contains("decisions")) cfg.spec.decisions = g.at("decisions").get<std::string>();
      if (g.contains("adversary")) cfg.spec.adversary = g.at("adversary").get<std::string>();
    }
    if (root.contains("policy")) {
      const auto& p = root.at("policy");
      detail::reject_unknown(p, {"kind", "epsilon"}, "policy.");
      if (p.contains("kind")) cfg.spec.policy = parse_policy(p.at("kind").get<std::string>());
      if (p.contains("epsilon")) {
        const auto& e = p.at("epsilon");
        cfg.spec.epsilon = e.is_string() ? parse_epsilon(e.get<std::string>()) : std::optional(e.get<double>());
      }
    }
    if (root.contains("experiment")) {
      const auto& x = root.at("experiment");
      detail::reject_unknown(x, {"horizon", "runs", "seed", "threads", "out"}, "experiment.");
      if (x.contains("horizon")) cfg.spec.horizon = x.at("horizon").get<std::size_t>();
      if (x.contains("runs")) cfg.spec.runs = x.at("runs").get<std::size_t>();
      if (x.contains("seed")) cfg.spec.seed = x.at("seed").get<std::uint64_t>();
      if (x.contains("threads")) cfg.spec.threads = x.at("threads").get<unsigned>();
      if (x.contains("out")) cfg.spec.out_dir = x.at("out").get<std::string>();
    }
    if (root.contains("sweep")) {
      const auto& s = root.at("sweep");
      detail::reject_unknown(s, {"horizons", "epsilons"}, "sweep.");
      if (s.contains("horizons")) cfg.horizons = s.at("horizons").get<std::vector<std::size_t>>();
      if (s.contains("epsilons")) cfg.epsilons = s.at("epsilons").get<std::vector<double>>();
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  Json root;
  try {
    root = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError("config '" + path + "': " + e.what());
  }
  return parse_config(root);
}

}  // namespace tsg
