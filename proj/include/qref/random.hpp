#pragma once

// Portable deterministic randomness. The standard distributions are
// implementation-defined, so every draw used for output goes through here.

#include <cstdint>
#include <limits>
#include <vector>

namespace qref {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for an independent stream identified by (seed, index).
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(seed ^ mix64(index + 0x9e3779b97f4a7c15ULL));
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

/// Uniform integer in [0, bound). bound must be positive.
template <typename Rng>
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

/// Uniform integer in [lo, hi].
template <typename Rng>
std::uint64_t uniform_between(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
  return lo + uniform_below(rng, hi - lo + 1);
}

/// Uniform double in [0, 1) with 53 bits of precision.
template <typename Rng>
double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename Rng>
bool bernoulli(Rng& rng, double p) {
  return uniform_unit(rng) < p;
}

/// Fisher-Yates with the portable draw above.
template <typename T, typename Rng>
void shuffle(std::vector<T>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace qref
