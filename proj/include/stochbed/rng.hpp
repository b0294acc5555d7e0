#pragma once

#include <cstdint>

namespace stochbed {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile (inverse CDF), accurate to full double
/// precision on (0, 1). Throws std::domain_error outside (0, 1).
double normal_quantile(double p);

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Mixes a parent seed with a stream tag so that independent substreams
/// can be handed out reproducibly (replication index, iteration index,
/// per-sample index, ...).
inline uint64_t derive_seed(uint64_t seed, uint64_t tag) {
  uint64_t s = seed ^ (0x9E3779B97F4A7C15ULL + tag * 0xD1B54A32D192ED03ULL);
  splitmix64(s);
  return splitmix64(s);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t tag1, uint64_t tag2) {
  return derive_seed(derive_seed(seed, tag1), tag2);
}

/// FNV-1a, so call sites can name their streams.
inline uint64_t tag_hash(const char* tag) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (const char* c = tag; *c; ++c) {
    h ^= static_cast<unsigned char>(*c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline uint64_t derive_seed(uint64_t seed, const char* tag) {
  return derive_seed(seed, tag_hash(tag));
}

inline uint64_t derive_seed(uint64_t seed, const char* tag, uint64_t index) {
  return derive_seed(derive_seed(seed, tag_hash(tag)), index);
}

/// xoshiro256** seeded through splitmix64. Self-contained so that streams
/// are bit-identical across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
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

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1), safe to feed to quantile functions.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal draw via the inverse CDF.
  double normal() { return normal_quantile(uniform_open()); }

  /// Uniform integer in [0, n).
  uint64_t uniform_index(uint64_t n) {
    // Rejection-free multiply-shift; bias < 2^-64 is irrelevant here.
    return static_cast<uint64_t>(
        (static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t state_[4];
};

}  // namespace stochbed
