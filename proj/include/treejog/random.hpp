#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace treejog {

using Rng = std::mt19937_64;

// Mixes a base seed with stream indices into an independent 64-bit seed.
// Used to give each replicate, sample and feature its own RNG stream so
// results do not depend on evaluation order.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> streams) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * streams.size());
  words.push_back(static_cast<std::uint32_t>(base));
  words.push_back(static_cast<std::uint32_t>(base >> 32));
  for (auto s : streams) {
    words.push_back(static_cast<std::uint32_t>(s));
    words.push_back(static_cast<std::uint32_t>(s >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> streams) {
  return Rng(derive_seed(base, streams));
}

}  // namespace treejog
