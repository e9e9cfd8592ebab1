#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rebec {

using rng_type = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent substream seed from a master seed and a path of
/// integer tags, e.g. derive_seed(master, {generation, purpose}). The result
/// depends only on its arguments, never on call order.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = mix64(master);
  for (auto t : tags) h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

inline rng_type make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  return rng_type{derive_seed(master, tags)};
}

// Tags that separate the RNG consumers of one run.
namespace stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t tournament = 2;
inline constexpr std::uint64_t variation = 3;
inline constexpr std::uint64_t sources = 4;
inline constexpr std::uint64_t member = 5;
inline constexpr std::uint64_t observation = 6;
inline constexpr std::uint64_t sensitivity = 7;
inline constexpr std::uint64_t scenarios = 8;
inline constexpr std::uint64_t calibration = 9;
inline constexpr std::uint64_t ensemble = 10;
inline constexpr std::uint64_t truth_wind = 11;
inline constexpr std::uint64_t domain = 12;
}  // namespace stream

}  // namespace rebec
