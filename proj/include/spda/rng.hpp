#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace spda {

/// Deterministic random source. All randomness in the library flows through
/// this class so that a (seed, stream, index) triple pins every draw exactly,
/// independent of platform or standard-library version.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  /// Uniform draw in [lo, hi). 53-bit mantissa mapping, not std::uniform_real.
  double uniform(double lo = 0.0, double hi = 1.0) {
    double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

  /// Standard normal via Box-Muller; caches the spare draw.
  double normal();

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  long uniform_int(long n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (long i = static_cast<long>(v.size()) - 1; i > 0; --i) {
      long j = uniform_int(i + 1);
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
    }
  }

  /// Stable sub-seed for (stream, index) pairs, e.g. per-epoch batch orders.
  static uint64_t derive(uint64_t seed, uint64_t stream, uint64_t index);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace spda
