#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bmm {

/// Engine used for every random draw in the library.
using Engine = std::mt19937_64;

/// Stream tags that keep derived substreams for different purposes disjoint.
enum class Stream : std::uint64_t {
  kSample = 1,
  kPilot = 2,
  kBlockDraw = 3,
  kGenerateM = 4,
  kGenerateN = 5,
  kReplication = 6,
  kData = 7,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the substream addressed by `path` under `seed`.
///
/// Each path component is folded in as h = mix64(h ^ mix64(component)), so
/// (seed, 1, 2) and (seed, 2, 1) address different streams. A substream
/// depends only on its address, never on how many draws other streams made.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream tag,
                                    std::initializer_list<std::uint64_t> path = {}) {
  std::uint64_t h = derive_seed(seed, {static_cast<std::uint64_t>(tag)});
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

inline Engine make_engine(std::uint64_t seed, Stream tag, std::initializer_list<std::uint64_t> path = {}) {
  return Engine(derive_seed(seed, tag, path));
}

}  // namespace bmm
