#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace diftrans {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent generator for task `stream` of a run seeded with `seed`.
/// Depends only on (seed, stream), so results do not depend on scheduling.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t salt = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(mix64(seed)), static_cast<std::uint32_t>(mix64(seed) >> 32),
                    static_cast<std::uint32_t>(mix64(stream ^ 0x5bd1e995ULL)),
                    static_cast<std::uint32_t>(mix64(stream) >> 32),
                    static_cast<std::uint32_t>(mix64(salt + 0x27d4eb2fULL))};
  return Rng(seq);
}

/// Multinomial(n, p) by sequential conditional binomials.
std::vector<std::int64_t> sample_multinomial(Rng& rng, std::span<const double> p,
                                             std::int64_t n);

/// Sizes of each support point in a uniform without-replacement draw of
/// `draws` units from a population with the given unit counts.
std::vector<std::int64_t> sample_without_replacement(Rng& rng,
                                                     std::span<const std::int64_t> counts,
                                                     std::int64_t draws);

}  // namespace diftrans
