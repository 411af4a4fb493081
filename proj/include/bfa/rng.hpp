#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace bfa {

// Everything random in this library flows through the generators below so
// that results are bit-exact across platforms and compilers. The standard
// library distributions are deliberately avoided: their output is
// implementation-defined.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// xoshiro256** seeded through splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform over the 2^width strings (width a power of two makes the
  // masked draw exactly unbiased).
  std::uint32_t next_bits(int width) {
    return static_cast<std::uint32_t>(next_u64() & ((1ull << width) - 1ull));
  }

  std::uint64_t seed() const { return seed_; }

  // Independent child stream. Derivation uses the original seed, not the
  // current state, so derived streams do not depend on how many draws the
  // parent has made.
  Rng derive(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0xD1B54A32D192ED03ull * (stream + 1));
    return splitmix64_next(s);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_ = 0;
};

// Named shot source: the same (seed, descriptor) pair always produces the
// same draw sequence. The descriptor keeps independent parts of a larger
// simulation (calibration runs, measurement rounds, shards) on independent
// streams without manual bookkeeping of stream indices.
class ShotStream {
 public:
  ShotStream(std::uint64_t seed, std::string_view descriptor)
      : seed_(seed),
        descriptor_(descriptor),
        rng_(Rng::derive_seed(seed, fnv1a64(descriptor))) {}

  std::uint64_t u64() {
    ++draws_;
    return rng_.next_u64();
  }

  double unit() {
    ++draws_;
    return rng_.next_unit();
  }

  std::uint32_t bits(int width) {
    ++draws_;
    return rng_.next_bits(width);
  }

  std::uint64_t seed() const { return seed_; }
  const std::string& descriptor() const { return descriptor_; }
  std::uint64_t draws() const { return draws_; }

 private:
  std::uint64_t seed_;
  std::string descriptor_;
  Rng rng_;
  std::uint64_t draws_ = 0;
};

}  // namespace bfa
