#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>

namespace fm {

// Deterministic, serializable RNG (xoshiro256**, seeded via splitmix64).
// std::mt19937 + <random> distributions are implementation-defined, which
// would break bitwise reproducibility of runs across standard libraries.
class Rng {
 public:
  Rng() : Rng(0) {}

  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
    has_cached_normal_ = false;
    cached_normal_ = 0.0;
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int n) {  // [0, n)
    return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
  }

  // standard normal via Box-Muller (pair cached)
  double normal() {
    if (has_cached_normal_) {
      has_cached_normal_ = false;
      return cached_normal_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_normal_ = true;
    return r * std::cos(a);
  }

  // Derive an independent stream; mixes tag into the state.
  Rng split(uint64_t tag) const {
    uint64_t x = state_[0] ^ (tag * 0x9E3779B97F4A7C15ull);
    x ^= state_[3] + 0x2545F4914F6CDD1Dull;
    return Rng(x);
  }

  std::array<uint64_t, 6> serialize() const {
    return {state_[0], state_[1], state_[2], state_[3],
            has_cached_normal_ ? 1ull : 0ull,
            std::bit_cast<uint64_t>(cached_normal_)};
  }

  static Rng deserialize(const std::array<uint64_t, 6>& s) {
    Rng r;
    r.state_ = {s[0], s[1], s[2], s[3]};
    r.has_cached_normal_ = s[4] != 0;
    r.cached_normal_ = std::bit_cast<double>(s[5]);
    return r;
  }

  static uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t x = a ^ (b * 0x9E3779B97F4A7C15ull) ^ 0xD1B54A32D192ED03ull;
    splitmix64(x);
    return splitmix64(x);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::array<uint64_t, 4> state_{};
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace fm
