#pragma once

#include <complex>
#include <cmath>
#include <cstdint>

namespace combcast {

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

// Counter-based generator: output i of a keyed stream is a pure function of
// (key, i). Draws can therefore be evaluated in any order, or from different
// threads, and still agree bit-exactly with a serial run.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t word(std::uint64_t counter) const {
    return mix64(key_ + 0x9E3779B97F4A7C15ULL * (counter + 1));
  }

  // Uniform on (0, 1]; never returns 0 so it is safe under log().
  double uniform01(std::uint64_t counter) const {
    return static_cast<double>((word(counter) >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(std::uint64_t counter, double lo, double hi) const {
    return lo + (hi - lo) * uniform01(counter);
  }

  // Circularly-symmetric complex Gaussian, unit variance (Box-Muller in
  // polar form). Consumes counters 2i and 2i+1.
  std::complex<double> complex_gaussian(std::uint64_t i) const {
    const double u1 = uniform01(2 * i);
    const double u2 = uniform01(2 * i + 1);
    const double r = std::sqrt(-std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

// Derives an independent stream key from a master seed and a salt
// (e.g. a draw index or a purpose tag).
inline std::uint64_t derive_key(std::uint64_t master, std::uint64_t salt) {
  return mix64(master + 0x9E3779B97F4A7C15ULL * (salt + 1));
}

// Purpose tags so distinct uses of the same master seed never share a stream.
namespace rng_stream {
constexpr std::uint64_t kUserPlacement = 0x100;
constexpr std::uint64_t kFading = 0x200;
constexpr std::uint64_t kSchedule = 0x300;
constexpr std::uint64_t kRandomization = 0x400;
}  // namespace rng_stream

// Stateful convenience wrapper over CounterRng.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : rng_(key) {}

  double uniform01() { return rng_.uniform01(next_++); }
  double uniform(double lo, double hi) { return rng_.uniform(next_++, lo, hi); }
  std::uint64_t word() { return rng_.word(next_++); }

  std::complex<double> complex_gaussian() {
    const double u1 = rng_.uniform01(next_++);
    const double u2 = rng_.uniform01(next_++);
    const double r = std::sqrt(-std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // 64-bit word modulo n; bias is negligible for the n used here (<= 1e6).
    return word() % n;
  }

 private:
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

}  // namespace combcast
