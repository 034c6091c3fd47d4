#pragma once

// Counter-based random streams. A stream is identified by (seed, cycle, lane,
// purpose) and can be regenerated at any time without touching other streams,
// so simulation batches are independent of scheduling and thread count.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace muxsim {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// SplitMix64 sequence started from a hashed key. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : state_(key) {}

  CounterRng(std::uint64_t seed, std::uint64_t cycle, std::uint32_t lane, std::uint32_t purpose) noexcept
      : state_(splitmix64(splitmix64(splitmix64(seed) ^ cycle) ^ ((std::uint64_t{lane} << 32) | purpose))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_open_zero() noexcept { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Photon-pair number of a two-mode squeezed vacuum: P(n) = (1 - xi^2) xi^(2n).
/// Inverse-CDF sampling using P(N >= n) = xi^(2n).
template <class Rng>
std::uint32_t sample_pair_count(double xi, Rng& rng) {
  if (xi <= 0.0) return 0;
  const double u = rng.uniform_open_zero();
  const double n = std::floor(std::log(u) / (2.0 * std::log(xi)));
  constexpr double cap = 1e6;
  return static_cast<std::uint32_t>(n < cap ? n : cap);
}

/// Binomial loss channel: each of n photons survives independently with probability eta.
template <class Rng>
std::uint32_t thin(std::uint32_t n, double eta, Rng& rng) {
  if (n == 0 || eta <= 0.0) return 0;
  if (eta >= 1.0) return n;
  if (n <= 32) {
    std::uint32_t k = 0;
    for (std::uint32_t i = 0; i < n; ++i) k += rng.uniform() < eta;
    return k;
  }
  std::binomial_distribution<std::uint32_t> dist(n, eta);
  return dist(rng);
}

template <class Rng>
bool bernoulli(double p, Rng& rng) {
  return p > 0.0 && rng.uniform() < p;
}

}  // namespace muxsim
