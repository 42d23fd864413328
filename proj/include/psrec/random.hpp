#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "psrec/errors.hpp"

namespace psrec {

// Derives an independent stream seed from a master seed and a stream index
// (splitmix64 finalizer). Simulated scenes, label sampling and solver
// shuffling each get their own stream so adding one consumer never perturbs
// another.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic random source. All transforms are written out here rather
// than taken from <random> distributions because libstdc++ does not pin
// distribution algorithms across releases; the engine itself (mt19937_64) is
// specified bit-exactly by the standard, so results are reproducible
// everywhere as long as the transforms are ours.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer on [lo, hi], inclusive, bias-free via rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw DomainError("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(gen_());  // full 64-bit range
    const std::uint64_t reject_above = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v = gen_();
    while (v >= reject_above) v = gen_();
    return lo + static_cast<std::int64_t>(v % span);
  }

  // Standard normal via Box-Muller. The sine twin is discarded; one draw per
  // call keeps the consumption pattern easy to reason about in tests.
  double normal() {
    const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;          // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Poisson draw. Knuth's product method below lambda = 30, Hormann's PTRS
  // transformed rejection above; both exact samplers, split purely for speed.
  std::int64_t poisson(double lambda) {
    if (lambda < 0.0) throw DomainError("poisson: negative rate");
    if (lambda == 0.0) return 0;
    if (lambda < 30.0) return poisson_knuth(lambda);
    return poisson_ptrs(lambda);
  }

 private:
  std::int64_t poisson_knuth(double lambda) {
    const double limit = std::exp(-lambda);
    std::int64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

  std::int64_t poisson_ptrs(double lambda) {
    const double b = 0.931 + 2.53 * std::sqrt(lambda);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_lambda = std::log(lambda);
    for (;;) {
      double u = uniform01() - 0.5;
      double v = uniform01();
      double us = 0.5 - std::fabs(u);
      double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          k * log_lambda - lambda - std::lgamma(k + 1.0)) {
        return static_cast<std::int64_t>(k);
      }
    }
  }

  std::mt19937_64 gen_;
};

}  // namespace psrec
