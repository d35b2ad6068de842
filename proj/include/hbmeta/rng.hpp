#pragma once

#include <cstdint>

#include "hbmeta/math.hpp"

namespace hbmeta {

/// SplitMix64 generator. Counter-based output mixing makes nearby seeds
/// produce unrelated streams, so per-chain and per-replicate streams are
/// derived directly from (seed, index). Normal draws use the inverse-CDF
/// map so every variate is a pure function of the bit stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Stream for worker `index` of a run seeded with `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix(seed + 0x9E3779B97F4A7C15ULL * (index + 1)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() { return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal via the high-accuracy quantile.
  double normal() { return math::ndtr_inverse(uniform_open()); }

  /// Gamma(shape, 1) by Marsaglia-Tsang squeeze.
  double gamma(double shape) {
    if (shape < 1.0) {
      double g = gamma(shape + 1.0);
      return g * std::pow(uniform_open(), 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = uniform_open();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
        return d * v;
      }
    }
  }

  double beta(double alpha, double beta_param) {
    double a = gamma(alpha);
    double b = gamma(beta_param);
    return a / (a + b);
  }

  std::int64_t binomial(std::int64_t n, double p) {
    std::int64_t k = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      if (uniform01() < p) ++k;
    }
    return k;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace hbmeta
