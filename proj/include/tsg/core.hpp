#pragma once

// Domain types for the online linear game: decision sets with a
// linear-maximization oracle, states, cumulative state, instance parameters
// and regret accounting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tsg {

using Vector = std::vector<double>;

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ProtocolViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct EndOfSequence : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedMode : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline void require_dimension(std::size_t expected, std::size_t actual, const char* what) {
  if (expected != actual) {
    throw InvalidInput(std::string(what) + ": dimension " + std::to_string(actual) +
                       ", expected " + std::to_string(expected));
  }
}

inline void require_finite(std::span<const double> x, const char* what) {
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidInput(std::string(what) + ": non-finite coordinate");
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm1(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += std::abs(v);
  return acc;
}

inline double norm2(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc);
}

inline double norm_inf(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc = std::max(acc, std::abs(v));
  return acc;
}

/// A state s_t revealed after each decision. Coordinates are always finite.
class StateVector {
 public:
  explicit StateVector(Vector coords) : coords_(std::move(coords)) {
    require_finite(coords_, "state");
  }

  std::size_t dimension() const noexcept { return coords_.size(); }
  const Vector& coords() const noexcept { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }

  friend bool operator==(const StateVector&, const StateVector&) = default;

 private:
  Vector coords_;
};

/// S_t = s_1 + ... + s_t together with t.
class CumulativeState {
 public:
  explicit CumulativeState(std::size_t n) : coords_(n, 0.0) {}

  std::size_t dimension() const noexcept { return coords_.size(); }
  std::size_t rounds_included() const noexcept { return rounds_; }
  const Vector& coords() const noexcept { return coords_; }

  void add(const StateVector& s) {
    require_dimension(coords_.size(), s.dimension(), "cumulative_state");
    for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i] += s[i];
    ++rounds_;
  }

  friend bool operator==(const CumulativeState&, const CumulativeState&) = default;

 private:
  Vector coords_;
  std::size_t rounds_ = 0;
};

inline CumulativeState cumulative_state(std::span<const StateVector> states, std::size_t n) {
  CumulativeState total(n);
  for (const auto& s : states) total.add(s);
  return total;
}

/// Dimension inferred from the first state; an empty sequence needs cumulative_state(states, n).
inline CumulativeState cumulative_state(std::span<const StateVector> states) {
  if (states.empty()) throw InvalidInput("cumulative_state: empty sequence has no dimension");
  return cumulative_state(states, states.front().dimension());
}

enum class DecisionSetKind { FiniteVertexList, BasisExperts, BinaryHypercube };

/// The decision set D together with its argmax oracle M(x).
///
/// Decisions are addressed by index: list position for FiniteVertexList,
/// coordinate for BasisExperts, and the bitmask (bit i = coordinate i) for
/// BinaryHypercube. Ties go to the lowest index; for the hypercube a zero
/// coordinate resolves to 0.
class DecisionSet {
 public:
  static DecisionSet finite(std::vector<Vector> vertices) {
    if (vertices.empty()) throw InvalidInput("decision set: empty vertex list");
    const std::size_t n = vertices.front().size();
    if (n == 0) throw InvalidInput("decision set: zero dimension");
    for (const auto& v : vertices) {
      require_dimension(n, v.size(), "decision set vertex");
      require_finite(v, "decision set vertex");
    }
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      for (std::size_t j = i + 1; j < vertices.size(); ++j) {
        if (vertices[i] == vertices[j]) throw InvalidInput("decision set: duplicate vertex");
      }
    }
    return DecisionSet(DecisionSetKind::FiniteVertexList, n, std::move(vertices));
  }

  static DecisionSet basis(std::size_t n) {
    if (n == 0) throw InvalidInput("decision set: zero dimension");
    return DecisionSet(DecisionSetKind::BasisExperts, n, {});
  }

  static DecisionSet hypercube(std::size_t n) {
    if (n == 0 || n > 63) throw InvalidInput("decision set: hypercube dimension must be in [1, 63]");
    return DecisionSet(DecisionSetKind::BinaryHypercube, n, {});
  }

  DecisionSetKind kind() const noexcept { return kind_; }
  std::size_t dimension() const noexcept { return n_; }

  std::uint64_t size() const noexcept {
    switch (kind_) {
      case DecisionSetKind::FiniteVertexList: return vertices_.size();
      case DecisionSetKind::BasisExperts: return n_;
      case DecisionSetKind::BinaryHypercube: return std::uint64_t{1} << n_;
    }
    return 0;
  }

  Vector vertex(std::uint64_t index) const {
    if (index >= size()) throw InvalidInput("decision set: index out of range");
    switch (kind_) {
      case DecisionSetKind::FiniteVertexList: return vertices_[index];
      case DecisionSetKind::BasisExperts: {
        Vector e(n_, 0.0);
        e[index] = 1.0;
        return e;
      }
      case DecisionSetKind::BinaryHypercube: {
        Vector d(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) d[i] = ((index >> i) & 1U) ? 1.0 : 0.0;
        return d;
      }
    }
    return {};
  }

  /// ⟨vertex(index), x⟩ without materializing the vertex.
  double reward(std::uint64_t index, std::span<const double> x) const {
    require_dimension(n_, x.size(), "reward");
    switch (kind_) {
      case DecisionSetKind::FiniteVertexList: return dot(vertices_.at(index), x);
      case DecisionSetKind::BasisExperts: return x[index];
      case DecisionSetKind::BinaryHypercube: {
        double acc = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
          if ((index >> i) & 1U) acc += x[i];
        }
        return acc;
      }
    }
    return 0.0;
  }

  /// Index of M(x) = argmax_d ⟨d, x⟩.
  std::uint64_t argmax(std::span<const double> x) const {
    require_dimension(n_, x.size(), "linear_argmax");
    require_finite(x, "linear_argmax");
    switch (kind_) {
      case DecisionSetKind::FiniteVertexList: {
        std::uint64_t best = 0;
        double best_value = dot(vertices_[0], x);
        for (std::size_t i = 1; i < vertices_.size(); ++i) {
          const double value = dot(vertices_[i], x);
          if (value > best_value) {
            best = i;
            best_value = value;
          }
        }
        return best;
      }
      case DecisionSetKind::BasisExperts:
        return static_cast<std::uint64_t>(std::max_element(x.begin(), x.end()) - x.begin());
      case DecisionSetKind::BinaryHypercube: {
        std::uint64_t mask = 0;
        for (std::size_t i = 0; i < n_; ++i) {
          if (x[i] > 0.0) mask |= std::uint64_t{1} << i;
        }
        return mask;
      }
    }
    return 0;
  }

  /// max_{d,d'} ‖d − d'‖₁.
  double l1_diameter() const {
    switch (kind_) {
      case DecisionSetKind::FiniteVertexList: {
        double best = 0.0;
        for (std::size_t i = 0; i < vertices_.size(); ++i) {
          for (std::size_t j = i + 1; j < vertices_.size(); ++j) {
            double dist = 0.0;
            for (std::size_t k = 0; k < n_; ++k) dist += std::abs(vertices_[i][k] - vertices_[j][k]);
            best = std::max(best, dist);
          }
        }
        return best;
      }
      case DecisionSetKind::BasisExperts: return n_ >= 2 ? 2.0 : 0.0;
      case DecisionSetKind::BinaryHypercube: return static_cast<double>(n_);
    }
    return 0.0;
  }

  /// max_d ‖d‖₂.
  double max_l2_norm() const {
    switch (kind_) {
      case DecisionSetKind::FiniteVertexList: {
        double best = 0.0;
        for (const auto& v : vertices_) best = std::max(best, norm2(v));
        return best;
      }
      case DecisionSetKind::BasisExperts: return 1.0;
      case DecisionSetKind::BinaryHypercube: return std::sqrt(static_cast<double>(n_));
    }
    return 0.0;
  }

  /// (min_d ⟨d,s⟩, max_d ⟨d,s⟩).
  std::pair<double, double> reward_range(std::span<const double> s) const {
    require_dimension(n_, s.size(), "reward_range");
    switch (kind_) {
      case DecisionSetKind::FiniteVertexList: {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& v : vertices_) {
          const double r = dot(v, s);
          lo = std::min(lo, r);
          hi = std::max(hi, r);
        }
        return {lo, hi};
      }
      case DecisionSetKind::BasisExperts:
        return {*std::min_element(s.begin(), s.end()), *std::max_element(s.begin(), s.end())};
      case DecisionSetKind::BinaryHypercube: {
        double lo = 0.0, hi = 0.0;
        for (double v : s) (v < 0.0 ? lo : hi) += v;
        return {lo, hi};
      }
    }
    return {0.0, 0.0};
  }

  const std::vector<Vector>& vertices() const noexcept { return vertices_; }

 private:
  DecisionSet(DecisionSetKind kind, std::size_t n, std::vector<Vector> vertices)
      : kind_(kind), n_(n), vertices_(std::move(vertices)) {}

  DecisionSetKind kind_;
  std::size_t n_;
  std::vector<Vector> vertices_;
};

inline Vector linear_argmax(const DecisionSet& set, std::span<const double> x) {
  return set.vertex(set.argmax(x));
}

/// Instance constants D, R, A1, A2 and the nonnegative-reward flag.
struct GameParams {
  std::size_t n = 0;
  double D = 0.0;
  double R = 0.0;
  double A1 = 0.0;
  double A2 = 0.0;
  bool nonneg_rewards = true;
};

inline GameParams params_from_instance(const DecisionSet& set, std::span<const StateVector> pool) {
  if (pool.empty()) throw InvalidInput("params_from_instance: empty state pool");
  GameParams p;
  p.n = set.dimension();
  p.D = set.l1_diameter();
  for (const auto& s : pool) {
    require_dimension(p.n, s.dimension(), "params_from_instance");
    const auto [lo, hi] = set.reward_range(s.coords());
    p.R = std::max({p.R, std::abs(lo), std::abs(hi)});
    p.A1 = std::max(p.A1, norm1(s.coords()));
    p.A2 = std::max(p.A2, norm2(s.coords()));
    if (lo < 0.0) p.nonneg_rewards = false;
  }
  return p;
}

/// One round of play.
struct RoundRecord {
  std::size_t t = 0;
  Vector noise;  // p_t, or θ_t for the posterior form; zeros when the policy has none
  std::uint64_t decision = 0;
  Vector state;
  double reward = 0.0;
};

/// Complete record of a single run.
struct GameTrace {
  std::size_t horizon = 0;
  std::uint64_t seed = 0;
  std::uint64_t run_index = 0;
  std::vector<RoundRecord> records;
  CumulativeState final_state{0};
  bool nonneg_violation = false;

  double cumulative_reward() const {
    double acc = 0.0;
    for (const auto& r : records) acc += r.reward;
    return acc;
  }
};

/// max_d Σ⟨d,s_t⟩ − Σ⟨d_t,s_t⟩. May be negative for a single run.
inline double compute_regret(const DecisionSet& set, const GameTrace& trace) {
  if (trace.records.size() != trace.horizon || trace.final_state.rounds_included() != trace.horizon) {
    throw InvalidInput("compute_regret: incomplete trace");
  }
  const auto& total = trace.final_state.coords();
  return set.reward(set.argmax(total), total) - trace.cumulative_reward();
}

}  // namespace tsg
