#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace arrayext {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent streams from a base seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `path` of `base`. derive_seed(s, {a, b}) differs from
/// derive_seed(s, {b, a}) and from derive_seed(s, {a}).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(base);
  for (auto p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace arrayext
