#pragma once

#include <span>
#include <vector>

namespace diftrans {

double mean(std::span<const double> xs);

/// Sample standard deviation (n - 1 denominator); zero for fewer than two values.
double stddev(std::span<const double> xs);

/// Linear-interpolation quantile (type 7) of an ascending sample.
double quantile_sorted(std::span<const double> sorted, double prob);

/// Quantiles of an unsorted sample.
std::vector<double> quantiles(std::vector<double> xs, std::span<const double> probs);

}  // namespace diftrans
