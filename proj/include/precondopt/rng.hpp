#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace precondopt {

/// Deterministic random stream. mt19937_64 is bit-exact across platforms; the
/// value transforms below are spelled out (not std::*_distribution) so that a
/// seed pins the generated numbers, not just the raw bit stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// uniform on [0,1) with 53-bit resolution
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// standard normal, Box-Muller (no cached spare: keeps the stream position
  /// a simple function of the draw count)
  double gaussian() {
    double u1 = uniform01();
    while (u1 == 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  std::vector<double> gaussian_vec(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = gaussian();
    return v;
  }

  /// geometric gap for Bernoulli(p) hit sequences: number of misses before the
  /// next hit. Used to sample sparse patterns without touching every slot.
  std::uint64_t geometric_skip(double p) {
    if (p >= 1.0) return 0;
    double u = uniform01();
    while (u == 0.0) u = uniform01();
    const double g = std::floor(std::log(u) / std::log1p(-p));
    return static_cast<std::uint64_t>(g);
  }

 private:
  std::mt19937_64 eng_;
};

/// Independent child seed for a tagged substream (splitmix64 finalizer mix).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace precondopt
