#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace avgpg {

/// All randomness flows through mt19937_64 streams.  The engine's output
/// sequence is fixed by the standard, and every distribution transform below
/// is written out explicitly, so identical seeds give bit-identical results
/// on every platform.
using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to decorrelate derived stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Seed of child stream `index` of `root`.  Nest derive_seed calls to split
/// further (e.g. per-epoch streams inside a per-run stream).
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  return mix64(root ^ mix64(index));
}

inline Rng make_stream(std::uint64_t root, std::uint64_t index) {
  return Rng(derive_seed(root, index));
}

/// Uniform draw in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller (two uniforms per draw, no cached state).
inline double normal01(Rng& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  // 1 - u1 lies in (0, 1], keeping the log finite.
  const double r = std::sqrt(-2.0 * std::log1p(-u1));
  return r * std::cos(2.0 * M_PI * u2);
}

/// Sample an index proportionally to the entries of a nonnegative weight
/// vector that sums to ~1.  Rounding spill lands on the last index.
template <typename Derived>
int sample_index(const Eigen::MatrixBase<Derived>& weights, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  const int n = static_cast<int>(weights.size());
  for (int i = 0; i < n; ++i) {
    acc += static_cast<double>(weights[i]);
    if (u < acc) return i;
  }
  return n - 1;
}

} // namespace avgpg
