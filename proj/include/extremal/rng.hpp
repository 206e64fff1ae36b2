#pragma once

#include <cstdint>

namespace extremal {

// Finalizer of splitmix64. Bijective on 64-bit words; doubles as the hash
// used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

// splitmix64 stream. One instance per (seed, cell, replicate) so concurrent
// replicates never share state.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  // Uniform on the open interval (0,1): centers of a 2^-53 grid, so neither
  // endpoint is reachable and log(u) is always finite.
  double uniform01() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// Deterministic seed for the stream identified by (base, a, b). Any two
// distinct triples map to distinct seeds with overwhelming probability.
constexpr std::uint64_t derive_stream(std::uint64_t base, std::uint64_t a = 0,
                                      std::uint64_t b = 0) {
  std::uint64_t s = mix64(base + 0x9e3779b97f4a7c15ull);
  s = mix64(s + 0xbf58476d1ce4e5b9ull * (a + 1));
  s = mix64(s + 0x94d049bb133111ebull * (b + 1));
  return s;
}

}  // namespace extremal
