#pragma once

// Oblivious state-sequence generators. next_state(t) depends only on the
// adversary's own parameters and t.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tsg/core.hpp"
#include "tsg/random.hpp"

namespace tsg {

/// Parses "1,0.5,-2" into a vector. Surrounding blanks are ignored.
inline Vector parse_csv_row(std::string_view line) {
  Vector row;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) comma = line.size();
    std::string_view field = line.substr(pos, comma - pos);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc{} || end != field.data() + field.size()) {
      throw ParseError("malformed number '" + std::string(field) + "'");
    }
    row.push_back(value);
    pos = comma + 1;
  }
  return row;
}

/// One state per line, comma-separated; dimension fixed by the first line.
/// Blank lines and lines starting with '#' are skipped.
inline std::vector<StateVector> parse_state_lines(std::istream& in) {
  std::vector<StateVector> states;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#') continue;
    Vector row;
    try {
      row = parse_csv_row(line);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!states.empty() && row.size() != states.front().dimension()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(states.front().dimension()) + " coordinates, got " +
                       std::to_string(row.size()));
    }
    try {
      states.emplace_back(std::move(row));
    } catch (const InvalidInput& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return states;
}

inline std::vector<StateVector> load_state_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open state file '" + path + "'");
  auto states = parse_state_lines(in);
  if (states.empty()) throw ParseError("state file '" + path + "' holds no states");
  return states;
}

enum class AdversaryKind { Constant, IidUniform, Alternating, FromFile };

class Adversary {
 public:
  static Adversary constant(Vector v) {
    Adversary a(AdversaryKind::Constant, v.size());
    a.states_.emplace_back(std::move(v));
    return a;
  }

  /// Independent coordinates uniform on [lo, hi], keyed by (seed, t).
  static Adversary iid_uniform(std::size_t n, double lo, double hi, std::uint64_t seed) {
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw InvalidInput("uniform adversary: need finite lo <= hi");
    }
    Adversary a(AdversaryKind::IidUniform, n);
    a.lo_ = lo;
    a.hi_ = hi;
    a.seed_ = seed;
    return a;
  }

  /// u on odd rounds and v on even rounds; phase 1 swaps them.
  static Adversary alternating(Vector u, Vector v, int phase = 0) {
    require_dimension(u.size(), v.size(), "alternating adversary");
    if (phase != 0 && phase != 1) throw InvalidInput("alternating adversary: phase must be 0 or 1");
    Adversary a(AdversaryKind::Alternating, u.size());
    a.states_.emplace_back(std::move(u));
    a.states_.emplace_back(std::move(v));
    a.phase_ = phase;
    return a;
  }

  static Adversary from_states(std::vector<StateVector> states) {
    if (states.empty()) throw InvalidInput("file adversary: no states");
    Adversary a(AdversaryKind::FromFile, states.front().dimension());
    a.states_ = std::move(states);
    return a;
  }

  static Adversary from_file(const std::string& path) { return from_states(load_state_file(path)); }

  AdversaryKind kind() const noexcept { return kind_; }
  std::size_t dimension() const noexcept { return n_; }

  StateVector next_state(std::size_t t) const {
    if (t < 1) throw InvalidInput("next_state: round must be >= 1");
    switch (kind_) {
      case AdversaryKind::Constant: return states_[0];
      case AdversaryKind::IidUniform: {
        KeyedStream s(derive_key(seed_, kUniformTag, t));
        Vector v(n_);
        for (auto& x : v) x = s.uniform(lo_, hi_);
        return StateVector(std::move(v));
      }
      case AdversaryKind::Alternating: return states_[(t + 1 + phase_) % 2];
      case AdversaryKind::FromFile:
        if (t > states_.size()) {
          throw EndOfSequence("state file exhausted at round " + std::to_string(t) + " (holds " +
                              std::to_string(states_.size()) + ")");
        }
        return states_[t - 1];
    }
    throw InvalidInput("next_state: unknown adversary");
  }

  /// s_1..s_T.
  std::vector<StateVector> sequence(std::size_t horizon) const {
    std::vector<StateVector> out;
    out.reserve(horizon);
    for (std::size_t t = 1; t <= horizon; ++t) out.push_back(next_state(t));
    return out;
  }

 private:
  static constexpr std::uint64_t kUniformTag = 0x554e49464fULL;

  Adversary(AdversaryKind kind, std::size_t n) : kind_(kind), n_(n) {
    if (n == 0) throw InvalidInput("adversary: zero dimension");
  }

  AdversaryKind kind_;
  std::size_t n_;
  std::vector<StateVector> states_;
  double lo_ = 0.0;
  double hi_ = 1.0;
  std::uint64_t seed_ = 0;
  int phase_ = 0;
};

/// ⟨d,s⟩ ≥ 0 for every d in the set.
inline bool rewards_nonnegative(const DecisionSet& set, const StateVector& s) {
  return set.reward_range(s.coords()).first >= 0.0;
}

}  // namespace tsg
