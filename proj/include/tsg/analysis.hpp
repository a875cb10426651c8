#pragma once

// Regret-bound arithmetic, Gaussian-norm constants K_{p,n}, and certifiers
// for the two deterministic inequalities behind the √T bound.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <thread>
#include <variant>
#include <vector>

#include "tsg/core.hpp"
#include "tsg/policies.hpp"
#include "tsg/random.hpp"

namespace tsg {

enum class NormKind { Two, Infinity };

struct ClosedForm {};

struct MonteCarlo {
  std::uint64_t samples = 100000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

using ConstantMode = std::variant<ClosedForm, MonteCarlo>;

/// Value of K_{p,n} and where it came from.
struct ConstantEstimate {
  double value = 0.0;
  double standard_error = 0.0;  // 0 for closed form
  bool closed_form = true;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
};

/// √2·Γ((n+1)/2)/Γ(n/2).
inline double k2n_closed_form(std::size_t n) {
  if (n == 0) throw InvalidInput("k_pn: dimension must be >= 1");
  const double a = 0.5 * static_cast<double>(n + 1);
  const double b = 0.5 * static_cast<double>(n);
  if (n < 300) return std::numbers::sqrt2 * std::tgamma(a) / std::tgamma(b);
  return std::numbers::sqrt2 * std::exp(std::lgamma(a) - std::lgamma(b));
}

namespace detail {

inline constexpr std::uint64_t kShardSize = 1 << 16;

struct NormMoments {
  double sum = 0.0;
  double sum_sq = 0.0;
};

inline NormMoments gaussian_norm_shard(NormKind p, std::size_t n, std::uint64_t seed,
                                       std::uint64_t shard, std::uint64_t count) {
  KeyedStream stream(derive_key(seed, 0x4b504eULL, shard));
  NormMoments m;
  for (std::uint64_t i = 0; i < count; ++i) {
    double norm = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double z = stream.normal();
      norm = p == NormKind::Two ? norm + z * z : std::max(norm, std::abs(z));
    }
    if (p == NormKind::Two) norm = std::sqrt(norm);
    m.sum += norm;
    m.sum_sq += norm * norm;
  }
  return m;
}

}  // namespace detail

/// Monte Carlo estimate of E‖Z‖_p for Z ~ N(0, I_n). Samples are split into
/// fixed-size shards keyed by (seed, shard), so the result does not depend
/// on the thread count.
inline ConstantEstimate k_pn_monte_carlo(NormKind p, std::size_t n, const MonteCarlo& mc) {
  if (n == 0) throw InvalidInput("k_pn: dimension must be >= 1");
  if (mc.samples < 10000) throw InvalidInput("k_pn: monte carlo needs at least 10^4 samples");
  const std::uint64_t shards = (mc.samples + detail::kShardSize - 1) / detail::kShardSize;
  std::vector<detail::NormMoments> parts(shards);
  auto run_shard = [&](std::uint64_t s) {
    const std::uint64_t begin = s * detail::kShardSize;
    const std::uint64_t count = std::min(detail::kShardSize, mc.samples - begin);
    parts[s] = detail::gaussian_norm_shard(p, n, mc.seed, s, count);
  };
  const unsigned workers = std::max(1U, std::min<unsigned>(mc.threads, static_cast<unsigned>(shards)));
  if (workers == 1) {
    for (std::uint64_t s = 0; s < shards; ++s) run_shard(s);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::uint64_t s = w; s < shards; s += workers) run_shard(s);
      });
    }
  }
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& part : parts) {
    sum += part.sum;
    sum_sq += part.sum_sq;
  }
  const double count = static_cast<double>(mc.samples);
  const double mean = sum / count;
  const double var = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0));
  return {mean, std::sqrt(var / count), false, mc.samples, mc.seed};
}

inline ConstantEstimate k_pn(NormKind p, std::size_t n, const ConstantMode& mode) {
  if (std::holds_alternative<MonteCarlo>(mode)) return k_pn_monte_carlo(p, n, std::get<MonteCarlo>(mode));
  if (p == NormKind::Infinity) throw UnsupportedMode("k_pn: no closed form for p = infinity");
  ConstantEstimate e;
  e.value = k2n_closed_form(n);
  return e;
}

struct BoundInputs {
  double epsilon = 1.0;
  double T = 1.0;
  double R = 0.0;
  double A2 = 0.0;
  double D = 0.0;
  double K2n = 1.0;
  double Kinfn = 1.0;
};

inline void validate(const BoundInputs& b) {
  for (double v : {b.epsilon, b.T, b.R, b.A2, b.D, b.K2n, b.Kinfn}) {
    if (!std::isfinite(v)) throw InvalidInput("bound inputs must be finite");
  }
  if (!(b.epsilon > 0.0)) throw InvalidInput("bound inputs: epsilon must be positive");
  if (b.T < 1.0) throw InvalidInput("bound inputs: T must be >= 1");
  if (b.R < 0.0 || b.A2 < 0.0 || b.D < 0.0) throw InvalidInput("bound inputs: R, A2, D must be >= 0");
  if (!(b.K2n > 0.0) || !(b.Kinfn > 0.0)) throw InvalidInput("bound inputs: K constants must be positive");
}

/// √ε·R·A2·K2n·T + ε·R·A2²·T/2 + 2·D·Kinfn/√ε.
inline double regret_bound(const BoundInputs& b) {
  validate(b);
  const double root_eps = std::sqrt(b.epsilon);
  return root_eps * b.R * b.A2 * b.K2n * b.T + b.epsilon * b.R * b.A2 * b.A2 * b.T / 2.0 +
         2.0 * b.D * b.Kinfn / root_eps;
}

inline double epsilon_star(std::size_t horizon) {
  if (horizon < 1) throw InvalidInput("epsilon_star: horizon must be >= 1");
  return 1.0 / static_cast<double>(horizon);
}

struct InequalityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool holds = true;
};

inline InequalityReport make_report(double lhs, double rhs) {
  const double slack = rhs - lhs;
  return {lhs, rhs, slack, slack >= -1e-9 * std::max(1.0, std::abs(rhs))};
}

/// ⟨M(S_T),S_T⟩ ≤ Σ_t⟨M(S_t+p_t),s_t⟩ + D·Σ_t‖p_t − p_{t−1}‖_∞ with p_0 = 0.
inline InequalityReport check_be_the_leader(const DecisionSet& set, std::span<const StateVector> states,
                                            std::span<const Vector> perturbations) {
  if (states.size() != perturbations.size()) {
    throw InvalidInput("check_be_the_leader: states and perturbations differ in length");
  }
  if (states.empty()) throw InvalidInput("check_be_the_leader: empty sequence");
  const std::size_t n = set.dimension();
  const double diameter = params_from_instance(set, states).D;

  CumulativeState total(n);
  Vector previous(n, 0.0);
  double leader_reward = 0.0;
  double variation = 0.0;
  for (std::size_t t = 0; t < states.size(); ++t) {
    const auto& p = perturbations[t];
    require_dimension(n, p.size(), "check_be_the_leader perturbation");
    total.add(states[t]);
    Vector x = total.coords();
    double step = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += p[i];
      step = std::max(step, std::abs(p[i] - previous[i]));
    }
    leader_reward += set.reward(set.argmax(x), states[t].coords());
    variation += step;
    previous = p;
  }
  const auto& final_total = total.coords();
  const double lhs = set.reward(set.argmax(final_total), final_total);
  return make_report(lhs, leader_reward + diameter * variation);
}

/// Σ_{t=2}^T ‖p_t − p_{t−1}‖_∞ ≤ ‖p_1‖_∞ for p_t = p_1·√(1+q_t).
inline InequalityReport check_noise_telescoping(std::span<const double> p1, std::size_t horizon) {
  if (horizon < 2) throw InvalidInput("check_noise_telescoping: horizon must be >= 2");
  double lhs = 0.0;
  Vector previous = coupled_noise(p1, 1);
  for (std::size_t t = 2; t <= horizon; ++t) {
    Vector current = coupled_noise(p1, t);
    double step = 0.0;
    for (std::size_t i = 0; i < current.size(); ++i) step = std::max(step, std::abs(current[i] - previous[i]));
    lhs += step;
    previous = std::move(current);
  }
  return make_report(lhs, norm_inf(p1));
}

}  // namespace tsg
