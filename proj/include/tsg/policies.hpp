#pragma once

// TSG(ε) in three interchangeable forms (posterior sampling, Gaussian
// perturbed leader, coupled single-draw noise) plus the Follow-the-Leader
// and exponential-noise FPL baselines.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsg/core.hpp"
#include "tsg/random.hpp"

namespace tsg {

/// ε together with q_1 = 0, q_t = 1/(t−1)² for t ≥ 2.
class PerturbationSchedule {
 public:
  explicit PerturbationSchedule(double epsilon) : epsilon_(epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw InvalidInput("perturbation schedule: epsilon must be positive and finite");
    }
  }

  double epsilon() const noexcept { return epsilon_; }

  static double q(std::size_t t) noexcept {
    if (t <= 1) return 0.0;
    const double k = static_cast<double>(t - 1);
    return 1.0 / (k * k);
  }

  /// Per-coordinate noise variance ε⁻¹(1 + q_t).
  double variance(std::size_t t) const noexcept { return (1.0 + q(t)) / epsilon_; }

 private:
  double epsilon_;
};

struct PosteriorParams {
  Vector mean;
  double variance = 1.0;
};

/// Gaussian mean posterior for iid N(μ, likelihood_var) samples under a
/// N(prior_mean, prior_var) prior.
inline std::pair<double, double> conjugate_posterior(double prior_mean, double prior_var,
                                                     double likelihood_var,
                                                     std::span<const double> samples) {
  if (samples.empty()) throw InvalidInput("conjugate_posterior: no samples");
  if (!(prior_var > 0.0) || !(likelihood_var > 0.0)) {
    throw InvalidInput("conjugate_posterior: variances must be positive");
  }
  const double k = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double x : samples) sum += x;
  const double sample_mean = sum / k;
  const double scaled_lik = likelihood_var / k;
  const double mean = (prior_var * sample_mean + scaled_lik * prior_mean) / (prior_var + scaled_lik);
  const double variance = 1.0 / (1.0 / prior_var + k / likelihood_var);
  return {mean, variance};
}

/// Posterior over μ at round t given S_{t−1}; equals the prior N(0, ε⁻¹) at t = 1.
inline PosteriorParams tsg_posterior_params(const PerturbationSchedule& schedule, std::size_t t,
                                            const CumulativeState& previous) {
  if (t < 1) throw InvalidInput("tsg_posterior_params: round must be >= 1");
  if (previous.rounds_included() != t - 1) {
    throw InvalidInput("tsg_posterior_params: cumulative state does not cover rounds 1..t-1");
  }
  const double eps = schedule.epsilon();
  PosteriorParams post;
  post.mean.assign(previous.dimension(), 0.0);
  if (t == 1) {
    post.variance = 1.0 / eps;
    return post;
  }
  const double k = static_cast<double>(t - 1);
  const double weight = k / (k * k + 1.0);
  for (std::size_t i = 0; i < post.mean.size(); ++i) post.mean[i] = previous.coords()[i] * weight;
  post.variance = 1.0 / (eps * (1.0 + k * k));
  return post;
}

inline Vector tsg_sample_theta(const PosteriorParams& params, std::span<const double> z) {
  require_dimension(params.mean.size(), z.size(), "tsg_sample_theta");
  const double sd = std::sqrt(params.variance);
  Vector theta(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) theta[i] = params.mean[i] + sd * z[i];
  return theta;
}

/// S_{t−1} + √(ε⁻¹(1+q_t))·z.
inline Vector tsg_perturbed_state(const PerturbationSchedule& schedule, std::size_t t,
                                  const CumulativeState& previous, std::span<const double> z) {
  require_dimension(previous.dimension(), z.size(), "tsg_perturbation_decision");
  const double sd = std::sqrt(schedule.variance(t));
  Vector x(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) x[i] = previous.coords()[i] + sd * z[i];
  return x;
}

inline Vector tsg_perturbation_decision(const DecisionSet& set, const PerturbationSchedule& schedule,
                                        std::size_t t, const CumulativeState& previous,
                                        std::span<const double> z) {
  require_dimension(set.dimension(), previous.dimension(), "tsg_perturbation_decision");
  return linear_argmax(set, tsg_perturbed_state(schedule, t, previous, z));
}

/// p_t = p_1·√(1 + q_t).
inline Vector coupled_noise(std::span<const double> p1, std::size_t t) {
  const double scale = std::sqrt(1.0 + PerturbationSchedule::q(t));
  Vector p(p1.begin(), p1.end());
  if (t >= 2) {
    for (auto& v : p) v *= scale;
  }
  return p;
}

enum class PolicyKind { TsgPosterior, TsgPerturbation, TsgCoupled, FplExponential, FollowTheLeader };

inline std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::TsgPosterior: return "tsg-posterior";
    case PolicyKind::TsgPerturbation: return "tsg-perturb";
    case PolicyKind::TsgCoupled: return "tsg-coupled";
    case PolicyKind::FplExponential: return "fpl-exp";
    case PolicyKind::FollowTheLeader: return "ftl";
  }
  return "unknown";
}

inline PolicyKind parse_policy(std::string_view name) {
  for (auto kind : {PolicyKind::TsgPosterior, PolicyKind::TsgPerturbation, PolicyKind::TsgCoupled,
                    PolicyKind::FplExponential, PolicyKind::FollowTheLeader}) {
    if (policy_name(kind) == name) return kind;
  }
  throw InvalidInput("unknown policy '" + std::string(name) + "'");
}

inline bool is_tsg(PolicyKind kind) {
  return kind == PolicyKind::TsgPosterior || kind == PolicyKind::TsgPerturbation ||
         kind == PolicyKind::TsgCoupled;
}

/// Single-run policy state. step() and observe() must alternate, starting
/// with step(set, 1).
class Policy {
 public:
  Policy(PolicyKind kind, std::size_t n, PerturbationSchedule schedule, NoiseStream noise)
      : kind_(kind), schedule_(schedule), noise_(noise), total_(n), last_noise_(n, 0.0) {}

  static Policy follow_the_leader(std::size_t n) {
    return Policy(PolicyKind::FollowTheLeader, n, PerturbationSchedule(1.0), NoiseStream{});
  }

  PolicyKind kind() const noexcept { return kind_; }
  const PerturbationSchedule& schedule() const noexcept { return schedule_; }
  const CumulativeState& cumulative() const noexcept { return total_; }

  /// p_t for the perturbation forms, θ_t for the posterior form.
  const Vector& last_noise() const noexcept { return last_noise_; }

  /// Returns the index of d_t in `set`.
  std::uint64_t step(const DecisionSet& set, std::size_t t) {
    if (awaiting_observation_) throw ProtocolViolation("step: previous decision not yet observed");
    if (t != total_.rounds_included() + 1) throw ProtocolViolation("step: rounds must increase by one");
    require_dimension(total_.dimension(), set.dimension(), "step");
    const std::size_t n = total_.dimension();

    std::uint64_t decision = 0;
    switch (kind_) {
      case PolicyKind::TsgPosterior: {
        const auto z = noise_.gaussian(t, n);
        last_noise_ = tsg_sample_theta(tsg_posterior_params(schedule_, t, total_), z);
        decision = set.argmax(last_noise_);
        break;
      }
      case PolicyKind::TsgPerturbation: {
        const auto z = noise_.gaussian(t, n);
        const double sd = std::sqrt(schedule_.variance(t));
        for (std::size_t i = 0; i < n; ++i) last_noise_[i] = sd * z[i];
        decision = set.argmax(tsg_perturbed_state(schedule_, t, total_, z));
        break;
      }
      case PolicyKind::TsgCoupled: {
        if (t == 1) {
          first_draw_ = noise_.gaussian(1, n);
          const double sd = 1.0 / std::sqrt(schedule_.epsilon());
          for (auto& v : *first_draw_) v *= sd;
        }
        last_noise_ = coupled_noise(*first_draw_, t);
        decision = set.argmax(perturbed(last_noise_));
        break;
      }
      case PolicyKind::FplExponential: {
        last_noise_ = noise_.laplace(t, n, schedule_.epsilon());
        decision = set.argmax(perturbed(last_noise_));
        break;
      }
      case PolicyKind::FollowTheLeader:
        decision = set.argmax(total_.coords());
        break;
    }
    awaiting_observation_ = true;
    return decision;
  }

  void observe(const StateVector& s) {
    if (!awaiting_observation_) throw ProtocolViolation("observe: no pending decision");
    total_.add(s);
    awaiting_observation_ = false;
  }

 private:
  Vector perturbed(std::span<const double> p) const {
    Vector x = total_.coords();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += p[i];
    return x;
  }

  PolicyKind kind_;
  PerturbationSchedule schedule_;
  NoiseStream noise_;
  CumulativeState total_;
  Vector last_noise_;
  std::optional<Vector> first_draw_;
  bool awaiting_observation_ = false;
};

}  // namespace tsg
