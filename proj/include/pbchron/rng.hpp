#pragma once
// Deterministic random numbers. std's distribution objects are
// implementation-defined, so every draw here is hand-rolled on top of
// mt19937_64 and produces the same stream on any platform. Independent
// streams for parallel work are derived by mixing labels into a master seed.

#include <cstdint>
#include <cmath>
#include <numbers>
#include <random>

namespace pbchron {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace detail

// Fold stream labels into a seed one by one; each distinct label chain gives
// an effectively independent stream.
inline std::uint64_t derive_seed(std::uint64_t master) { return detail::splitmix64(master); }

template <class... Rest>
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t label, Rest... rest) {
  return derive_seed(detail::splitmix64(master ^ detail::splitmix64(label)), rest...);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r < limit) return r % n;
    }
  }

  // Box-Muller (cosine branch only, no cached spare) so the stream position
  // after a draw never depends on call history.
  double normal(double mean, double sd) {
    double u1;
    do { u1 = uniform(); } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pbchron
