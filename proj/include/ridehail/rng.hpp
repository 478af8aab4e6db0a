#pragma once

#include <array>
#include <cstdint>

namespace ridehail {

// xoshiro256++ seeded through splitmix64. Chosen over std::mt19937 because
// the whole generation path (including the uniform-double mapping below) is
// specified bit-for-bit, so traces and reports reproduce across platforms
// and languages.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = split_mix(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53 random mantissa bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1].
  double next_double_open_closed() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Stream-splitting rule: substream k of master seed s is seeded with the
  // splitmix64 finalizer applied to s + (k+1) * golden ratio increment.
  // Documented so other implementations can reproduce episode k exactly.
  static std::uint64_t derive_stream(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    return mix(z);
  }

  static Rng substream(std::uint64_t master, std::uint64_t index) {
    return Rng(derive_stream(master, index));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t split_mix(std::uint64_t& s) {
    s += 0x9E3779B97F4A7C15ULL;
    return mix(s);
  }

  std::array<std::uint64_t, 4> state_;
};

}  // namespace ridehail
