#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bgcn {

// One SplitMix64 step: advances the state and returns a mixed 64-bit word.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based seed derivation. Every random stream in this project is
// derived from a single master seed by folding a sequence of integer tags
// (stream kind, ensemble index, trial index, ...) into a SplitMix64 state.
// The scheme is order-sensitive: derive_seed(m, {a, b}) != derive_seed(m, {b, a}).
// No ambient entropy is used anywhere in the library.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = master;
  (void)splitmix64(s);
  for (std::uint64_t t : tags) {
    s ^= t;
    (void)splitmix64(s);
  }
  return splitmix64(s);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64{seed};
}

// FNV-1a over raw bytes; used for cheap content hashes (provenance tags,
// config fingerprints), not for anything adversarial.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace bgcn
