#pragma once

#include "sgm/types.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sgm {

/// Counter-based generator: every draw is a pure function of (seed, stream,
/// counter), so results are identical on every platform and independent of
/// evaluation order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(mix(seed ^ mix(stream + 0x9E3779B97F4A7C15ULL))) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix(key_ ^ mix(counter));
  }

  // Uniform on (0, 1): 53 random mantissa bits offset by half an ulp.
  double uniform(std::uint64_t counter) const noexcept {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on counters 2i and 2i+1.
  double normal(std::uint64_t index) const noexcept {
    const std::uint64_t pair = index >> 1;
    const double u1 = uniform(2 * pair);
    const double u2 = uniform(2 * pair + 1);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return (index & 1) ? radius * std::sin(angle) : radius * std::cos(angle);
  }

  RealVector normal_vector(Eigen::Index n, std::uint64_t offset = 0) const {
    RealVector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = normal(offset + static_cast<std::uint64_t>(i));
    return out;
  }

 private:
  std::uint64_t key_;
};

/// Derives an independent seed for a sub-experiment.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
  return CounterRng::mix(CounterRng::mix(seed ^ CounterRng::mix(a + 1)) ^ (b * 0xD1B54A32D192ED03ULL));
}

}  // namespace sgm
