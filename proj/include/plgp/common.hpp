#pragma once

#include <cstdint>
#include <random>

namespace plgp {

// splitmix64 finalizer; used to derive independent RNG streams from
// (seed, stream-id) pairs so parallel cells never share state.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 0x632be59bd9b4e019ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(mix_seed(seed, stream));
}

}  // namespace plgp
