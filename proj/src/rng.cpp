#include "spda/rng.hpp"

#include <cmath>

#include "spda/errors.hpp"

namespace spda {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1, u2;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

long Rng::uniform_int(long n) {
  if (n <= 0) throw DimensionError("uniform_int needs n > 0");
  uint64_t un = static_cast<uint64_t>(n);
  uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<long>(x % un);
}

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

uint64_t Rng::derive(uint64_t seed, uint64_t stream, uint64_t index) {
  uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (0x517cc1b727220a95ULL * (stream + 1)));
  h = splitmix64(h ^ (0x2545f4914f6cdd1dULL * (index + 1)));
  return h;
}

}  // namespace spda
