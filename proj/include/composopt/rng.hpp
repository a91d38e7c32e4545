#ifndef COMPOSOPT_RNG_HPP
#define COMPOSOPT_RNG_HPP

#include <cstdint>
#include <limits>

#include "composopt/types.hpp"

namespace composopt {

/// Counter-based generator: draw n of stream `seed` is splitmix64(seed, n).
/// Output depends only on (seed, counter), so traces are reproducible across
/// platforms and standard-library implementations.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t at(std::uint64_t counter) const {
    return mix(mix(seed_) ^ (counter * 0xd1b54a32d192ed03ULL));
  }

  std::uint64_t next() { return at(counter_++); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on {lo, ..., hi}; rejection sampling keeps it unbiased.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo + 1;
    if (span == 0) return next();
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t r = next();
    while (r >= limit) r = next();
    return lo + r % span;
  }

  Vec uniform_vec(Eigen::Index n, double lo, double hi) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Index tau in {1, ..., K} returned by both algorithms.
inline std::size_t sample_output_index(std::uint64_t seed, std::size_t K) {
  CounterRng rng(seed);
  return static_cast<std::size_t>(rng.uniform_int(1, K));
}

}  // namespace composopt

#endif  // COMPOSOPT_RNG_HPP
