#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace varsmc {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) noexcept {
  return mix64(seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

/// Stage tags used to carve independent streams out of one user seed.
enum class StreamTag : std::uint64_t {
  prior_draw = 1,
  resample = 2,
  mh_move = 3,
  synthetic = 4,
  optimizer = 5,
  test = 99,
};

/// Counter-based generator: output i is mix64(key + i * golden). A stream is
/// addressed by (seed, tag, level, index), so draws never depend on which
/// thread consumes them or in which order particles are processed.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  constexpr StreamRng(std::uint64_t seed, StreamTag tag, std::uint64_t level,
                      std::uint64_t index) noexcept
      : key_(hash_combine(hash_combine(hash_combine(mix64(seed), static_cast<std::uint64_t>(tag)),
                                       level),
                          index)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the second variate is discarded so the
  /// generator carries no hidden state beyond the counter.
  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Student-t with `nu` degrees of freedom: z / sqrt(chi2_nu / nu).
  double student_t(double nu) noexcept {
    const double z = normal();
    const double g = gamma(0.5 * nu);
    return z / std::sqrt(2.0 * g / nu);
  }

  /// Gamma(shape, 1) by Marsaglia-Tsang.
  double gamma(double shape) noexcept {
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace varsmc
