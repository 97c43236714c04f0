#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace fairsketch::rng {

/// splitmix64 finalizer; used to derive stream seeds from a master seed so
/// that e.g. per-epoch shuffles never reuse generator state.
inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
  return mix(seed ^ mix(stream + 1));
}

/// mt19937_64 with hand-rolled draw helpers. std::uniform_*_distribution and
/// std::shuffle are implementation-defined, so every draw here goes through
/// explicit arithmetic; a given seed produces the same stream on any platform.
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + next_unit() * (hi - lo); }

  /// Uniform integer in [0, n). Modulo bias is ~n/2^64, irrelevant here.
  std::uint64_t bounded(std::uint64_t n) { return n == 0 ? 0 : gen_() % n; }

  /// Standard normal via Box-Muller on explicit unit draws.
  double next_gaussian();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937_64 gen_;
};

inline double SeededRng::next_gaussian() {
  double u1 = next_unit();
  double u2 = next_unit();
  while (u1 <= 0.0) u1 = next_unit();
  // sqrt(-2 ln u1) cos(2 pi u2)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace fairsketch::rng
