#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rankdiv {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a list of tags
/// (run index, slice index, role, ...). Same inputs, same seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(base);
  for (auto t : tags) h = splitmix64(h ^ splitmix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Stream roles used with derive_seed.
namespace stream {
inline constexpr std::uint64_t kMu = 1;
inline constexpr std::uint64_t kNu = 2;
inline constexpr std::uint64_t kDirections = 3;
inline constexpr std::uint64_t kResample = 4;
inline constexpr std::uint64_t kJitter = 5;
inline constexpr std::uint64_t kReference = 6;
inline constexpr std::uint64_t kInitial = 7;
inline constexpr std::uint64_t kDiagnostics = 8;
}  // namespace stream

}  // namespace rankdiv
