#pragma once

#include <cstdint>
#include <limits>

namespace ztd {

/// SplitMix64 finalizer. Bijective 64-bit mixer used both as the
/// generator output function and as the stable seed-derivation hash.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Node in the seed lineage tree. Children are derived by hashing, so a
/// sub-stream depends only on its path from the master seed and never on
/// how much randomness sibling streams consumed.
class Seed {
 public:
  constexpr explicit Seed(std::uint64_t value) noexcept : value_(value) {}

  constexpr std::uint64_t value() const noexcept { return value_; }

  constexpr Seed child(std::uint64_t tag) const noexcept {
    return Seed{mix64(value_ ^ mix64(tag + 0x9e3779b97f4a7c15ULL))};
  }

  template <typename... Tags>
  constexpr Seed child(std::uint64_t tag, Tags... rest) const noexcept {
    return child(tag).child(static_cast<std::uint64_t>(rest)...);
  }

  constexpr bool operator==(const Seed&) const noexcept = default;

 private:
  std::uint64_t value_;
};

/// SplitMix64 stream. Satisfies std::uniform_random_bit_generator so it
/// plugs into <random> distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit Rng(Seed seed) noexcept : state_(seed.value()) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>(operator()() >> 11) * 0x1.0p-53;
  }

  constexpr bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace ztd
