#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "diftrans/pmf.hpp"
#include "diftrans/transport.hpp"

namespace diftrans {

/// Resampling setup for placebo transport costs.
struct PlaceboConfig {
  int n_sims = 500;
  std::uint64_t seed = 0;
  std::vector<double> quantiles{0.025, 0.25, 0.5, 0.75, 0.975};
  /// Worker threads; 0 uses all available (capped by DIFTRANS_THREADS).
  /// Output does not depend on this.
  unsigned threads = 0;

  void validate() const;
};

struct PlaceboSummary {
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> quantiles;  // aligned with PlaceboConfig::quantiles
};

/// Which placebo statistic the bandwidth rule compares to the threshold.
struct SelectionRule {
  /// Empty: the placebo mean. Otherwise the placebo quantile at this level,
  /// which must be one of PlaceboConfig::quantiles.
  std::optional<double> quantile_level;
};

inline constexpr double kDefaultPlaceboThreshold = 0.0005;
inline constexpr double kDefaultDisplacementTolerance = 0.005;

struct ScanRow {
  Bandwidth d;
  double real_cost = 0.0;
  PlaceboSummary placebo;
  std::optional<double> dit_value;
};

/// Real cost, placebo statistics and (optionally) the difference in transports
/// along an ascending bandwidth grid.
struct BandwidthScan {
  std::vector<double> quantile_levels;
  std::vector<ScanRow> rows;

  /// Columns d,real_cost,placebo_mean,placebo_sd,q025,...,q975,dit. The dit
  /// cell is empty when absent.
  void write_csv(std::ostream& out) const;
};

/// Before-and-after estimate: OT_d(pre, post).
double before_after(const PricePMF& pre, const PricePMF& post, Bandwidth d);

/// Placebo statistics of OT_d between two independent multinomial resamples of
/// sizes n_pre and n_post drawn from `base`, for every d in `grid`. All grid
/// points share the same replicate pairs. Deterministic in cfg.seed.
std::vector<PlaceboSummary> placebo_costs(const PricePMF& base, std::int64_t n_pre,
                                          std::int64_t n_post,
                                          std::span<const Bandwidth> grid,
                                          const PlaceboConfig& cfg);

PlaceboSummary placebo_cost(const PricePMF& base, std::int64_t n_pre, std::int64_t n_post,
                            Bandwidth d, const PlaceboConfig& cfg);

/// Smallest grid bandwidth whose placebo statistic is below `threshold`.
/// Throws SelectionError naming the smallest statistic when none qualifies.
Bandwidth select_bandwidth(std::span<const Bandwidth> grid,
                           std::span<const PlaceboSummary> placebo,
                           std::span<const double> quantile_levels, double threshold,
                           SelectionRule rule = {});

Bandwidth select_bandwidth(const PricePMF& base, std::int64_t n_pre, std::int64_t n_post,
                           std::span<const Bandwidth> grid, const PlaceboConfig& cfg,
                           double threshold = kDefaultPlaceboThreshold,
                           SelectionRule rule = {});

/// OT_{2d}(treated_pre, treated_post) - OT_d(control_pre, control_post).
/// Not clamped: negative values are reported as they are.
double diff_in_transports(const PricePMF& treated_pre, const PricePMF& treated_post,
                          const PricePMF& control_pre, const PricePMF& control_post,
                          Bandwidth d);

/// Treated/control pair for the difference in transports.
struct ControlPair {
  const PricePMF& pre;
  const PricePMF& post;
};

/// Builds the scan for the pre/post pair: real cost, placebo statistics for
/// resamples of `placebo_base` at sizes (pre.n(), post.n()), and the
/// difference in transports when `control` is given.
BandwidthScan bandwidth_scan(const PricePMF& pre, const PricePMF& post,
                             std::span<const Bandwidth> grid, const PricePMF& placebo_base,
                             const PlaceboConfig& cfg,
                             std::optional<ControlPair> control = std::nullopt);

/// Row maximizing dit among rows with d >= d_min; ties go to the smaller d.
std::pair<Bandwidth, double> select_dstar(const BandwidthScan& scan, Bandwidth d_min);

/// Lower admissible bandwidth: the larger of the noise floor and the
/// equal-displacement floor.
Bandwidth d_floor(Bandwidth placebo_rule_d, Bandwidth displacement_rule_d);

struct DisplacementRow {
  Bandwidth d;
  double cost_a = 0.0;
  double cost_b = 0.0;
  double difference = 0.0;  // cost_a - cost_b
};

/// Post-trends diagnostic: OT_d of both pairs at the same d.
std::vector<DisplacementRow> equal_displacement_curves(const PricePMF& a_pre,
                                                       const PricePMF& a_post,
                                                       const PricePMF& b_pre,
                                                       const PricePMF& b_post,
                                                       std::span<const Bandwidth> grid);

/// Smallest grid d from which |difference| < tolerance holds at every larger
/// grid point. Throws SelectionError when even the last row fails.
Bandwidth equal_displacement_floor(std::span<const DisplacementRow> curves,
                                   double tolerance = kDefaultDisplacementTolerance);

void write_displacement_csv(std::ostream& out, std::span<const DisplacementRow> rows);

/// Parses "lo:hi:step" (inclusive) or a comma-separated list into an ascending grid.
std::vector<Bandwidth> parse_grid(const std::string& spec);

}  // namespace diftrans
