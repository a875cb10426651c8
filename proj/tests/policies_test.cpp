#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.hpp"
#include "tsg/policies.hpp"

namespace tsg {
namespace {

using testing::Gen;

CumulativeState cumulative_of(const Vector& total, std::size_t rounds) {
  // rounds − 1 zero states plus one state carrying the whole total.
  CumulativeState s(total.size());
  for (std::size_t r = 1; r < rounds; ++r) s.add(StateVector(Vector(total.size(), 0.0)));
  if (rounds > 0) s.add(StateVector(total));
  return s;
}

TEST(PerturbationSchedule, QAndVariance) {
  const PerturbationSchedule s(2.0);
  EXPECT_EQ(PerturbationSchedule::q(1), 0.0);
  EXPECT_EQ(PerturbationSchedule::q(2), 1.0);
  EXPECT_EQ(PerturbationSchedule::q(3), 0.25);
  EXPECT_EQ(s.variance(1), 0.5);
  EXPECT_EQ(s.variance(2), 1.0);
  for (std::size_t t = 2; t < 1000; ++t) {
    EXPECT_LE(PerturbationSchedule::q(t + 1), PerturbationSchedule::q(t));
    EXPECT_GE(PerturbationSchedule::q(t), 0.0);
    EXPECT_LE(PerturbationSchedule::q(t), 1.0);
  }
  EXPECT_THROW(PerturbationSchedule(0.0), InvalidInput);
  EXPECT_THROW(PerturbationSchedule(-1.0), InvalidInput);
}

TEST(ConjugatePosterior, SymmetricZero) {
  const Vector samples{0.0};
  const auto [mean, var] = conjugate_posterior(0.0, 1.0, 1.0, samples);
  EXPECT_EQ(mean, 0.0);
  EXPECT_EQ(var, 0.5);
}

TEST(ConjugatePosterior, FlatPriorGivesSampleMean) {
  const Vector samples{2.0, 4.0};
  const auto [mean, var] = conjugate_posterior(0.0, 1e12, 1.0, samples);
  EXPECT_NEAR(mean, 3.0, 1e-9);
  EXPECT_NEAR(var, 0.5, 1e-9);
}

TEST(ConjugatePosterior, AgreesWithTsgDisplay) {
  // ε = 1, t = 3: prior N(0, 1), likelihood variance 1/(ε(t−1)) = 1/2, S = 6.
  const Vector samples{1.0, 5.0};
  const auto [mean, var] = conjugate_posterior(0.0, 1.0, 0.5, samples);
  EXPECT_NEAR(mean, 2.4, 1e-12);
  EXPECT_NEAR(var, 0.2, 1e-12);

  const auto post = tsg_posterior_params(PerturbationSchedule(1.0), 3, cumulative_of({6.0}, 2));
  EXPECT_NEAR(post.mean[0], 2.4, 1e-12);
  EXPECT_NEAR(post.variance, 0.2, 1e-12);
}

TEST(ConjugatePosterior, RejectsBadInput) {
  const Vector none;
  const Vector one{1.0};
  EXPECT_THROW(conjugate_posterior(0, 1, 1, none), InvalidInput);
  EXPECT_THROW(conjugate_posterior(0, 0, 1, one), InvalidInput);
  EXPECT_THROW(conjugate_posterior(0, 1, -1, one), InvalidInput);
}

TEST(TsgPosteriorParams, Examples) {
  const auto first = tsg_posterior_params(PerturbationSchedule(1.0), 1, CumulativeState(2));
  EXPECT_EQ(first.mean, (Vector{0, 0}));
  EXPECT_EQ(first.variance, 1.0);

  const auto second = tsg_posterior_params(PerturbationSchedule(1.0), 2, cumulative_of({4, 0}, 1));
  EXPECT_EQ(second.mean, (Vector{2, 0}));
  EXPECT_EQ(second.variance, 0.5);

  const auto third = tsg_posterior_params(PerturbationSchedule(4.0), 3, cumulative_of({10}, 2));
  EXPECT_DOUBLE_EQ(third.mean[0], 4.0);
  EXPECT_DOUBLE_EQ(third.variance, 1.0 / 20.0);
}

TEST(TsgPosteriorParams, RejectsBadRound) {
  EXPECT_THROW(tsg_posterior_params(PerturbationSchedule(1.0), 0, CumulativeState(1)), InvalidInput);
  EXPECT_THROW(tsg_posterior_params(PerturbationSchedule(1.0), 3, cumulative_of({1}, 1)), InvalidInput);
}

TEST(TsgPosteriorParams, AgreesWithGeneralConjugateFormula) {
  Gen gen(21);
  for (int trial = 0; trial < 500; ++trial) {
    const double eps = std::exp(gen.uniform(std::log(1e-4), std::log(10.0)));
    const std::size_t t = gen.index(2, 200);
    const std::size_t n = gen.index(1, 4);
    std::vector<Vector> states;
    CumulativeState total(n);
    for (std::size_t k = 1; k < t; ++k) {
      states.push_back(gen.uniform_vector(n, -2, 2));
      total.add(StateVector(states.back()));
    }
    const auto post = tsg_posterior_params(PerturbationSchedule(eps), t, total);
    for (std::size_t i = 0; i < n; ++i) {
      Vector samples;
      for (const auto& s : states) samples.push_back(s[i]);
      const double lik_var = 1.0 / (eps * static_cast<double>(t - 1));
      const auto [mean, var] = conjugate_posterior(0.0, 1.0 / eps, lik_var, samples);
      EXPECT_NEAR(post.mean[i], mean, 1e-12 * std::max(1.0, std::abs(mean)));
      EXPECT_NEAR(post.variance, var, 1e-12 * var);
    }
  }
}

TEST(TsgSampleTheta, Examples) {
  EXPECT_EQ(tsg_sample_theta({{0, 0}, 1.0}, Vector{1, -1}), (Vector{1, -1}));
  EXPECT_EQ(tsg_sample_theta({{2, 0}, 0.25}, Vector{0, 0}), (Vector{2, 0}));
  EXPECT_EQ(tsg_sample_theta({{1}, 9.0}, Vector{2}), (Vector{7}));
}

TEST(TsgPerturbationDecision, Examples) {
  const auto set = DecisionSet::basis(2);
  EXPECT_EQ(tsg_perturbation_decision(set, PerturbationSchedule(1.0), 2, cumulative_of({3, 1}, 1), Vector{0, 0}),
            (Vector{1, 0}));
  for (double eps : {1e-3, 1.0, 50.0}) {
    EXPECT_EQ(tsg_perturbation_decision(set, PerturbationSchedule(eps), 1, CumulativeState(2), Vector{-1, 2}),
              (Vector{0, 1}));
  }
  const auto state = tsg_perturbed_state(PerturbationSchedule(1.0), 2, cumulative_of({1, 0}, 1), Vector{0, 1});
  EXPECT_DOUBLE_EQ(state[1], std::sqrt(2.0));
  EXPECT_EQ(tsg_perturbation_decision(set, PerturbationSchedule(1.0), 2, cumulative_of({1, 0}, 1), Vector{0, 1}),
            (Vector{0, 1}));
  EXPECT_THROW(tsg_perturbation_decision(set, PerturbationSchedule(1.0), 1, CumulativeState(2), Vector{0}),
               InvalidInput);
}

TEST(CoupledNoise, Examples) {
  EXPECT_EQ(coupled_noise(Vector{1, 1}, 1), (Vector{1, 1}));
  const auto two = coupled_noise(Vector{1, 1}, 2);
  EXPECT_DOUBLE_EQ(two[0], std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(two[1], std::sqrt(2.0));
  const auto late = coupled_noise(Vector{1, 1}, 100000);
  EXPECT_NEAR(late[0], 1.0, 1e-9);
  EXPECT_DOUBLE_EQ(coupled_noise(Vector{3}, 4)[0], std::sqrt(10.0));
}

TEST(CoupledNoise, MarginalVarianceMatchesFreshNoise) {
  Gen gen(22);
  const double eps = 0.5;
  for (std::size_t t : {2U, 3U, 10U}) {
    const int draws = 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double p1 = gen.normal() / std::sqrt(eps);
      const double pt = coupled_noise(Vector{p1}, t)[0];
      sum += pt;
      sum_sq += pt * pt;
    }
    const double mean = sum / draws;
    const double var = sum_sq / draws - mean * mean;
    const double expected = PerturbationSchedule(eps).variance(t);
    EXPECT_NEAR(var, expected, 0.05 * expected) << "t=" << t;
  }
}

TEST(CoupledNoise, TelescopingSumBoundedByFirstDraw) {
  Gen gen(23);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = gen.index(1, 6);
    const std::size_t horizon = gen.index(2, 3000);
    const Vector p1 = gen.normal_vector(n);
    double sum = 0.0;
    for (std::size_t t = 2; t <= horizon; ++t) {
      const auto a = coupled_noise(p1, t);
      const auto b = coupled_noise(p1, t - 1);
      double step = 0.0;
      for (std::size_t i = 0; i < n; ++i) step = std::max(step, std::abs(a[i] - b[i]));
      sum += step;
    }
    EXPECT_LE(sum, norm_inf(p1));
  }
}

TEST(Equivalence, RescaledPosteriorSampleIsPerturbedState) {
  Gen gen(24);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = gen.index(1, 8);
    const std::size_t t = gen.index(2, 10000);
    const double eps = std::exp(gen.uniform(std::log(1e-4), std::log(10.0)));
    const Vector total = gen.uniform_vector(n, -static_cast<double>(t), static_cast<double>(t));
    const Vector z = gen.normal_vector(n);
    const auto previous = cumulative_of(total, t - 1);
    const PerturbationSchedule schedule(eps);

    const auto theta = tsg_sample_theta(tsg_posterior_params(schedule, t, previous), z);
    const double k = static_cast<double>(t - 1);
    const double c = k + 1.0 / k;
    const double sd = std::sqrt((1.0 + 1.0 / (k * k)) / eps);
    for (std::size_t i = 0; i < n; ++i) {
      const double expected = total[i] + sd * z[i];
      const double scale = std::max(std::abs(total[i]), std::abs(sd * z[i]));
      EXPECT_LE(std::abs(c * theta[i] - expected), 1e-9 * scale);
    }
    const auto set = DecisionSet::hypercube(n);
    EXPECT_EQ(linear_argmax(set, theta), tsg_perturbation_decision(set, schedule, t, previous, z));
  }
}

TEST(Policy, FollowTheLeaderFollowsCumulativeMax) {
  const auto set = DecisionSet::basis(2);
  auto ftl = Policy::follow_the_leader(2);
  EXPECT_EQ(ftl.step(set, 1), 0U);
  ftl.observe(StateVector({0, 1}));
  EXPECT_EQ(ftl.step(set, 2), 1U);
}

TEST(Policy, ProtocolViolations) {
  const auto set = DecisionSet::basis(2);
  Policy p(PolicyKind::TsgPerturbation, 2, PerturbationSchedule(1.0), NoiseStream(1, 0));
  EXPECT_THROW(p.observe(StateVector({1, 0})), ProtocolViolation);
  EXPECT_THROW(p.step(set, 2), ProtocolViolation);
  p.step(set, 1);
  EXPECT_THROW(p.step(set, 2), ProtocolViolation);
  p.observe(StateVector({1, 0}));
  EXPECT_THROW(p.step(set, 3), ProtocolViolation);
  EXPECT_NO_THROW(p.step(set, 2));
}

std::vector<std::uint64_t> play(PolicyKind kind, std::uint64_t seed, const DecisionSet& set,
                                const std::vector<StateVector>& states, double eps = 0.05) {
  Policy p(kind, set.dimension(), PerturbationSchedule(eps), NoiseStream(seed, 3));
  std::vector<std::uint64_t> decisions;
  for (std::size_t t = 1; t <= states.size(); ++t) {
    decisions.push_back(p.step(set, t));
    p.observe(states[t - 1]);
  }
  return decisions;
}

TEST(Policy, ReplayIsDeterministic) {
  Gen gen(25);
  const auto set = DecisionSet::hypercube(4);
  std::vector<StateVector> states;
  for (int t = 0; t < 200; ++t) states.emplace_back(gen.uniform_vector(4, -1, 1));
  for (auto kind : {PolicyKind::TsgPosterior, PolicyKind::TsgPerturbation, PolicyKind::TsgCoupled,
                    PolicyKind::FplExponential, PolicyKind::FollowTheLeader}) {
    EXPECT_EQ(play(kind, 9, set, states), play(kind, 9, set, states)) << policy_name(kind);
  }
  EXPECT_NE(play(PolicyKind::TsgPerturbation, 9, set, states), play(PolicyKind::TsgPerturbation, 10, set, states));
}

TEST(Policy, PosteriorAndPerturbationFormsDecideIdentically) {
  Gen gen(26);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = gen.index(2, 6);
    std::vector<Vector> vertices;
    for (int i = 0; i < 10; ++i) vertices.push_back(gen.uniform_vector(n, -1, 1));
    const auto set = DecisionSet::finite(vertices);
    std::vector<StateVector> states;
    for (int t = 0; t < 300; ++t) states.emplace_back(gen.uniform_vector(n, -1, 1));
    const double eps = std::exp(gen.uniform(std::log(1e-3), std::log(5.0)));
    EXPECT_EQ(play(PolicyKind::TsgPosterior, trial, set, states, eps),
              play(PolicyKind::TsgPerturbation, trial, set, states, eps));
  }
}

TEST(Policy, CoupledReusesFirstDraw) {
  const auto set = DecisionSet::basis(3);
  const double eps = 0.25;
  Policy p(PolicyKind::TsgCoupled, 3, PerturbationSchedule(eps), NoiseStream(5, 0));
  p.step(set, 1);
  const Vector p1 = p.last_noise();
  const auto z = NoiseStream(5, 0).gaussian(1, 3);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(p1[i], z[i] / std::sqrt(eps));
  p.observe(StateVector({1, 0, 0}));
  for (std::size_t t = 2; t < 20; ++t) {
    p.step(set, t);
    EXPECT_EQ(p.last_noise(), coupled_noise(p1, t));
    p.observe(StateVector({0, 1, 0}));
  }
}

TEST(Policy, ExponentialNoiseHasLaplaceScale) {
  // Var of a two-sided exponential with rate ε is 2/ε².
  const double eps = 2.0;
  NoiseStream noise(7, 0);
  double sum_sq = 0.0;
  const int rounds = 50000;
  for (int t = 1; t <= rounds; ++t) {
    const auto p = noise.laplace(t, 2, eps);
    sum_sq += p[0] * p[0] + p[1] * p[1];
  }
  EXPECT_NEAR(sum_sq / (2.0 * rounds), 2.0 / (eps * eps), 0.03 * 2.0 / (eps * eps));
}

TEST(Policy, PolicyNamesRoundTrip) {
  for (auto kind : {PolicyKind::TsgPosterior, PolicyKind::TsgPerturbation, PolicyKind::TsgCoupled,
                    PolicyKind::FplExponential, PolicyKind::FollowTheLeader}) {
    EXPECT_EQ(parse_policy(policy_name(kind)), kind);
  }
  EXPECT_THROW(parse_policy("hedge"), InvalidInput);
}

}  // namespace
}  // namespace tsg
