#pragma once

#include "randrand/types.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace randrand {

// Counter-based randomness: every variate is a pure function of
// (seed, stream, index), so columns of a sketch can be generated independently,
// in any order and from any thread, with identical results.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x9e3779b97f4a7c15ULL));
}

inline std::uint64_t keyed_bits(std::uint64_t seed, std::uint64_t stream,
                                std::uint64_t index) {
  return splitmix64(mix_keys(mix_keys(seed, stream), index));
}

/// Uniform in [0, 1) from 53 random bits.
inline double bits_to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double keyed_uniform(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t index) {
  return bits_to_unit(keyed_bits(seed, stream, index));
}

/// Standard normal variate; one Box-Muller cosine branch per index.
inline double keyed_normal(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t index) {
  const double u1 = 1.0 - keyed_uniform(seed, stream, 2 * index);      // (0, 1]
  const double u2 = keyed_uniform(seed, stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Small sequential generator used where a stream (not a counter) is natural:
/// power-iteration start vectors, Fisher-Yates shuffles.
class Prng {
 public:
  explicit Prng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(mix_keys(seed, stream)) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64(state_);
  }
  double uniform() { return bits_to_unit(next()); }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }
  /// Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
      r = next();
    } while (r >= limit);
    return r % bound;
  }

 private:
  std::uint64_t state_;
};

inline Vector gaussian_vector(Index n, std::uint64_t seed,
                              std::uint64_t stream = 0) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = keyed_normal(seed, stream, static_cast<std::uint64_t>(i));
  return v;
}

/// First k entries of a seeded permutation of [0, m). Partial Fisher-Yates,
/// so a longer prefix from the same (seed, stream) extends a shorter one.
inline std::vector<Index> permutation_prefix(std::uint64_t seed,
                                             std::uint64_t stream, Index m,
                                             Index k) {
  std::vector<Index> a(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) a[static_cast<std::size_t>(i)] = i;
  Prng rng(seed, stream);
  const Index kk = std::min(k, m);
  for (Index i = 0; i < kk; ++i) {
    const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(m - i)));
    std::swap(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)]);
  }
  a.resize(static_cast<std::size_t>(kk));
  return a;
}

}  // namespace randrand
