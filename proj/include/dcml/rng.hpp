#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace dcml {

using Engine = std::mt19937_64;

/// One step of the SplitMix64 generator; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// FNV-1a hash, used to turn scenario identifiers into stream keys.
std::uint64_t hash_key(std::string_view text);

/// Seed of an independent stream identified by (seed, keys...). Distinct key
/// tuples give statistically unrelated streams.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

inline Engine make_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Engine(seq);
}

/// Draws `k` distinct indices from [0, n) by a partial Fisher-Yates shuffle
/// of `pool` (which must hold 0..n-1 in some order). The sample is left in
/// pool[0, k).
template <class Pool>
void draw_subset(Engine& rng, Pool& pool, std::size_t k) {
  const std::size_t n = pool.size();
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
}

}  // namespace dcml
