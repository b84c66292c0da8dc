#pragma once

#include <cstdint>
#include <random>

namespace femtoq {

// Seeded stream whose output is identical across standard libraries: only the
// engine (fully specified by the standard) is used, never the distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  /// Independent child stream; used so that topology draws do not perturb learning draws.
  Rng split() {
    const std::uint64_t a = engine_();
    const std::uint64_t b = engine_();
    return Rng(a ^ (b << 1) ^ 0x9e3779b97f4a7c15ULL);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace femtoq
