#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace xwf {

// Deterministic random stream. Sub-streams are derived from a base seed plus
// stream ids so that per-subject / per-replicate work is schedule-independent:
// stream (seed, a, b) always yields the same sequence no matter which worker
// runs it. Variate generation is spelled out here rather than delegated to
// std::*_distribution so the draws are fixed by this code alone.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t id1 = 0,
                     std::uint64_t id2 = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(id1),
                      static_cast<std::uint32_t>(id1 >> 32),
                      static_cast<std::uint32_t>(id2),
                      static_cast<std::uint32_t>(id2 >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t bits() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(bits() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; fixed two-draw consumption per call.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = bits();
    } while (v >= limit);
    return v % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i)
      std::swap(items[i - 1], items[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace xwf
