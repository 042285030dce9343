#pragma once

#include <cmath>
#include <cstdint>

namespace gfcond {

// splitmix64: used as the stream mixer and as the raw uniform source.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

// Deterministic N(0,1) stream built on splitmix64 + Box-Muller, so output is
// bit-identical across platforms and runs. Streams are addressed by
// (seed, stream): every path gets its own stream, which makes generation
// order-independent (serial and parallel layouts produce the same numbers).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed, std::uint64_t stream = 0)
      : rng_(mix(seed, stream)) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = to_unit(rng_.next());
    const double u2 = to_unit(rng_.next());
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 6.283185307179586477;
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 m(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    m.next();
    return m.next();
  }

 private:
  // strictly inside (0,1) so log() is finite
  static double to_unit(std::uint64_t x) {
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
  }

  SplitMix64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace gfcond
