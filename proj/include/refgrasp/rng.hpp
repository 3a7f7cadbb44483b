#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace refgrasp {

using Rng = std::mt19937_64;

/// Seed used by every randomized entry point when the caller supplies none.
inline constexpr std::uint64_t kDefaultSeed = 20230607;

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

/// Mixes a run seed with a stable key (scene id, tuple id) so per-item
/// streams do not depend on processing order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

// The helpers below avoid std::*_distribution so draws are identical across
// standard library implementations.
std::size_t uniform_index(Rng& rng, std::size_t n);
double uniform_real(Rng& rng, double lo, double hi);
int uniform_int(Rng& rng, int lo, int hi);  // inclusive
bool bernoulli(Rng& rng, double p);

template <typename T>
void shuffle(Rng& rng, T& items) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace refgrasp
