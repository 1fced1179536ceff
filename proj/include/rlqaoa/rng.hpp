#pragma once

#include <cstdint>
#include <random>

namespace rlqaoa {

// splitmix64: mixes a seed into a well-distributed 64-bit stream.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a master seed and up to three
// stream tags (e.g. purpose, iteration, trajectory index).  Every consumer
// of randomness seeds its own engine through this function so that results
// are reproducible regardless of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64(s);
  s ^= a * 0x9e3779b97f4a7c15ull;
  h ^= splitmix64(s);
  s ^= b * 0xc2b2ae3d27d4eb4full;
  h ^= splitmix64(s);
  s ^= c * 0x165667b19e3779f9ull;
  h ^= splitmix64(s);
  return h;
}

// Stream tags used across the code base.
enum class Stream : std::uint64_t {
  init = 1,       // network weight initialisation
  action = 2,     // policy sampling, per (iteration, trajectory)
  noise = 3,      // measurement / gate noise, per (iteration, trajectory)
  optimizer = 4,  // classical optimizer restarts
  misc = 5,
};

inline std::mt19937_64 make_engine(std::uint64_t master, Stream s,
                                   std::uint64_t b = 0, std::uint64_t c = 0) {
  return std::mt19937_64(derive_seed(master, static_cast<std::uint64_t>(s), b, c));
}

}  // namespace rlqaoa
