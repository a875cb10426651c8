#pragma once

// Test-only helpers: an RNG independent of the library's counter streams and
// brute-force oracles over explicitly enumerated decision sets.

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "tsg/core.hpp"

namespace tsg::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal() { return std::normal_distribution<double>()(engine_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
  }

  Vector uniform_vector(std::size_t n, double lo, double hi) {
    Vector v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }

  Vector normal_vector(std::size_t n) {
    Vector v(n);
    for (auto& x : v) x = normal();
    return v;
  }

 private:
  std::mt19937_64 engine_;
};

/// Every vertex of a decision set, listed explicitly.
inline std::vector<Vector> enumerate(const DecisionSet& set) {
  std::vector<Vector> out;
  for (std::uint64_t i = 0; i < set.size(); ++i) out.push_back(set.vertex(i));
  return out;
}

inline double inner(const Vector& a, const Vector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double brute_max(const std::vector<Vector>& vertices, const Vector& x) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : vertices) best = std::max(best, inner(v, x));
  return best;
}

}  // namespace tsg::testing
