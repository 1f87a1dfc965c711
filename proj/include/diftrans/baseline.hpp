#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "diftrans/pmf.hpp"

namespace diftrans {

/// One weighted observation of the 2x2 design.
struct DidObservation {
  bool treated = false;
  bool post = false;
  double price = 0.0;
  double weight = 1.0;
};

/// log p = alpha0 + alpha1 treated + alpha2 post + alpha3 treated x post + e.
struct DidResult {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double alpha3 = 0.0;
  /// Classical standard errors in coefficient order; NaN without residual
  /// degrees of freedom.
  std::array<double, 4> se{};
  /// Total weight (units or rows).
  std::int64_t n_obs = 0;
  double r2 = 0.0;
};

enum class DidWeighting {
  kUnits,  // each record weighted by its quantity
  kRows,   // each record with positive quantity counts once
};

/// Weighted least squares on the saturated dummy design. Throws
/// SingularDesignError when a cell is empty and DomainError for a
/// nonpositive price.
DidResult did_ols(std::span<const DidObservation> obs);

/// Observations for treated and control cities in the pre and post windows.
/// Records outside both windows or of other cities are dropped.
std::vector<DidObservation> did_observations(std::span<const SalesRecord> records,
                                             const std::string& treated_city,
                                             const std::string& control_city,
                                             const PeriodFilter& pre, const PeriodFilter& post,
                                             DidWeighting weighting = DidWeighting::kUnits);

}  // namespace diftrans
