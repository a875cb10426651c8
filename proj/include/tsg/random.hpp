#pragma once

// Counter-based random streams. Every draw is a pure function of a key
// (seed, run index, round, ...) so results never depend on call order
// across runs or on how work is split between threads.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace tsg {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_key(std::uint64_t key, std::uint64_t part) noexcept {
  return splitmix64(key ^ splitmix64(part + 0x632be59bd9b4e019ULL));
}

template <typename... Parts>
constexpr std::uint64_t derive_key(std::uint64_t seed, Parts... parts) noexcept {
  std::uint64_t key = splitmix64(seed);
  ((key = mix_key(key, static_cast<std::uint64_t>(parts))), ...);
  return key;
}

/// SplitMix64 sequence starting from a derived key.
class KeyedStream {
 public:
  explicit constexpr KeyedStream(std::uint64_t key) noexcept : state_(key) {}

  constexpr std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on the open interval (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform_open();
  }

  /// Standard normal via Box-Muller; the second variate of each pair is kept.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform_open()));
    const double angle = 2.0 * std::numbers::pi * uniform_open();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Two-sided exponential with density (rate/2)·exp(-rate·|x|).
  double laplace(double rate) noexcept {
    const double u = uniform_open() - 0.5;
    const double magnitude = -std::log1p(-2.0 * std::abs(u)) / rate;
    return u < 0.0 ? -magnitude : magnitude;
  }

  std::vector<double> normal_vector(std::size_t n) {
    std::vector<double> z(n);
    for (auto& v : z) v = normal();
    return z;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Noise for one Monte Carlo run, addressed by round.
class NoiseStream {
 public:
  NoiseStream() = default;
  NoiseStream(std::uint64_t seed, std::uint64_t run_index) noexcept
      : seed_(seed), run_index_(run_index) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t run_index() const noexcept { return run_index_; }

  std::vector<double> gaussian(std::uint64_t round, std::size_t n) const {
    KeyedStream s(derive_key(seed_, kGaussianTag, run_index_, round));
    return s.normal_vector(n);
  }

  std::vector<double> laplace(std::uint64_t round, std::size_t n, double rate) const {
    KeyedStream s(derive_key(seed_, kLaplaceTag, run_index_, round));
    std::vector<double> p(n);
    for (auto& v : p) v = s.laplace(rate);
    return p;
  }

 private:
  static constexpr std::uint64_t kGaussianTag = 0x4741555353ULL;
  static constexpr std::uint64_t kLaplaceTag = 0x4c41504c41ULL;

  std::uint64_t seed_ = 0;
  std::uint64_t run_index_ = 0;
};

}  // namespace tsg
