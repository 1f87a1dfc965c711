#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace diftrans::detail {

struct FlowEntry {
  std::size_t source;
  std::size_t target;
  double mass;
};

// Dense transportation problem: ship `supply` to `demand` (equal totals) at
// minimum sum of cost(i, j) * flow. Successive shortest paths with Johnson
// potentials; costs must be nonnegative.
std::vector<FlowEntry> solve_transportation(
    std::span<const double> supply, std::span<const double> demand,
    const std::function<double(std::size_t, std::size_t)>& cost);

}  // namespace diftrans::detail
