#pragma once

#include <array>
#include <cstdint>

namespace ser {

/// xoshiro256++ with splitmix64 seeding. Self-contained so that streams are
/// reproducible across compilers and platforms (std:: distributions are not).
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& word : state_) {
      x += 0x9e3779b97f4a7c15ull;
      uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      word = z ^ (z >> 31);
    }
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [-limit, limit).
  double uniform_symmetric(double limit) { return (2.0 * uniform01() - 1.0) * limit; }

  /// Uniform integer in [0, n). n must be nonzero.
  uint64_t below(uint64_t n) { return next_u64() % n; }

 private:
  static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
  std::array<uint64_t, 4> state_{};
};

}  // namespace ser
