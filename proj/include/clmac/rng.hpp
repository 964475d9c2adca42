#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace clmac {

// Seeded draw helpers on top of a fixed 64-bit engine. The standard pins
// mt19937_64 output but not the distribution adaptors, so the adaptors are
// implemented here to keep traces reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t threshold = (-n) % n;
    for (;;) {
      const std::uint64_t r = gen_();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform integer in [lo, hi], both ends included.
  int range(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Uniform double in [0, 1).
  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double exponential(double mean) { return -mean * std::log1p(-unit()); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace clmac
