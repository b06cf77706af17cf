#pragma once

#include <cstdint>
#include <random>

namespace peerfx {

// Named substreams. Every random quantity is drawn from an engine seeded by
// (run seed, stream, index), so results do not depend on generation order.
enum class Stream : std::uint64_t {
  Population = 1,
  Graph = 2,
  Anniversary = 3,
  Messages = 4,
  Pageviews = 5,
  Weekly = 6,
  Corpus = 7,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                                    std::uint64_t index = 0) noexcept {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return splitmix64(h ^ index);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, Stream stream,
                          std::uint64_t index = 0) {
  return Engine(derive_seed(seed, stream, index));
}

}  // namespace peerfx
