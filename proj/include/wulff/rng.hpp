#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace wulff {

using Engine = std::mt19937_64;

// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based stream splitting: stream `i` of master seed `s` is seeded
// with splitmix64(splitmix64(s) ^ splitmix64(i + 1)). The mapping depends
// only on (s, i), so parallel chains are reproducible whatever the
// scheduling order.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 1));
}

inline Engine make_engine(std::uint64_t master, std::uint64_t index = 0) {
  return Engine(stream_seed(master, index));
}

// Uniform double in [0, 1).
inline double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Engine& rng, std::uint64_t n) {
  // Lemire's nearly-divisionless method.
  __extension__ using u128 = unsigned __int128;
  u128 m = static_cast<u128>(rng()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<u128>(rng()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

// Exponential variate with the given rate.
inline double exponential(Engine& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

}  // namespace wulff
