#pragma once

#include <cstdint>
#include <random>

namespace mmf {

/// Seeded random stream. The Gaussian path is a hand-rolled Box-Muller on
/// top of mt19937_64 so that identical seeds give bit-identical values on
/// every platform (std::normal_distribution makes no such promise).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal.
  double gaussian();

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace mmf
