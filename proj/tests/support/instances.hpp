#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "diftrans/equilibrium.hpp"
#include "diftrans/pmf.hpp"

namespace diftrans::testing {

/// PMF on `size` distinct values drawn from `pool`, with Dirichlet(1) masses.
PricePMF random_pmf(std::mt19937_64& rng, const std::vector<std::int64_t>& pool,
                    std::size_t size);

/// PMF with integer counts summing to `n` on `size` values from `pool`.
PricePMF random_count_pmf(std::mt19937_64& rng, const std::vector<std::int64_t>& pool,
                          std::size_t size, std::int64_t n);

/// `count` distinct integers in [lo, hi].
std::vector<std::int64_t> random_pool(std::mt19937_64& rng, std::size_t count, std::int64_t lo,
                                      std::int64_t hi);

/// Strictly decreasing piecewise-linear curve from (0, v_max) to (n_max, 0)
/// with `interior` random interior knots.
WtpCurve random_curve(std::mt19937_64& rng, int interior, double n_max = 700000.0,
                      double v_max = 280000.0);

}  // namespace diftrans::testing
