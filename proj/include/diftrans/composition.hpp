#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "diftrans/pmf.hpp"
#include "diftrans/transport.hpp"

namespace diftrans {

/// Monthly sales and license counts used to separate first-time from
/// returning buyers.
struct CompositionInputs {
  std::vector<std::pair<YearMonth, PricePMF>> monthly_pmfs;
  std::vector<std::pair<YearMonth, std::int64_t>> licenses;
  /// Share of licenses spent on new cars.
  double rho = 0.5;
  /// (first-time, returning) purchase shares in the pre and post periods.
  std::array<double, 2> theta_pre{0.5, 0.5};
  std::array<double, 2> theta_post{0.5, 0.5};
};

struct CompositionEstimate {
  PricePMF f_hat;
  PricePMF r_hat;
  double residual_ss = 0.0;
  /// False when the corresponding weights never vary away from zero, so the
  /// objective does not depend on that distribution; it is then returned as
  /// the average monthly PMF.
  bool f_identified = true;
  bool r_identified = true;
  /// First-time buyer share per month, aligned with the input months.
  std::vector<double> phi_f;
  std::array<double, 2> theta_pre{0.5, 0.5};
  std::array<double, 2> theta_post{0.5, 0.5};
  int iterations = 0;
  /// Projected-gradient mapping norm at the returned point.
  double gradient_mapping_norm = 0.0;
};

struct CompositionCorrection {
  std::map<Bandwidth, double> cost;  // OT_d(f_hat, r_hat)
  PricePMF p_pre;                    // theta_pre mix of f_hat and r_hat
  PricePMF p_post;
};

/// Least squares fit of the first-time and returning buyer distributions over
/// the product of two probability simplices, by projected gradient with exact
/// simplex projection and backtracking.
/// `start` optionally seeds (f, r) on the union support; the default start is
/// the average monthly PMF for both.
CompositionEstimate composition_fit(
    const CompositionInputs& inputs,
    std::optional<std::array<std::vector<double>, 2>> start = std::nullopt);

/// OT_d(f_hat, r_hat) on every grid point, plus the implied pre/post mixes.
CompositionCorrection composition_correction(const CompositionEstimate& est,
                                             std::span<const Bandwidth> grid);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::span<const double> v);

/// Objective value sum_{i,t} (phi_f f_i + phi_r r_i - p_it)^2 for masses laid
/// out on the union support of the monthly PMFs.
double composition_objective(const CompositionInputs& inputs, std::span<const double> f,
                             std::span<const double> r);

}  // namespace diftrans
