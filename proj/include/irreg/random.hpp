#ifndef IRREG_RANDOM_HPP
#define IRREG_RANDOM_HPP

// Seeded random streams. Every stochastic routine in the library takes a
// 64-bit seed; replicate- and block-level seeds are derived from a master
// seed by hashing (master, label, index), so results do not depend on the
// order in which parallel workers run.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace irreg {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view text,
                                       std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for task `label`, replicate `index`, under `master`.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                           std::uint64_t index = 0) noexcept {
  std::uint64_t h = splitmix64(master ^ fnv1a64(label));
  return splitmix64(h + splitmix64(index + 0x632be59bd9b4e019ULL));
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Exponential with mean one.
  double exponential() { return -std::log(uniform_open()); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Poisson count: inversion below mean 30, PTRS transformed rejection above.
  std::uint64_t poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    if (mean < 30.0) return poisson_inversion(mean);
    return poisson_ptrs(mean);
  }

 private:
  std::uint64_t poisson_inversion(double mean) {
    const double u = uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }

  // Hörmann (1993), "The transformed rejection method for generating Poisson
  // random variables".
  std::uint64_t poisson_ptrs(double mean) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::fabs(u);
      const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
          -mean + k * loglam - std::lgamma(k + 1.0)) {
        return static_cast<std::uint64_t>(k);
      }
    }
  }

  std::mt19937_64 engine_;
};

}  // namespace irreg

#endif  // IRREG_RANDOM_HPP
