#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "diftrans/equilibrium.hpp"
#include "diftrans/pmf.hpp"
#include "diftrans/transport.hpp"

namespace diftrans {

/// b-out-of-n subsampling without replacement.
struct SubsampleConfig {
  int n_draws = 200;
  /// Per-side subsample size floor(block_fraction * n). Mutually exclusive with b.
  std::optional<double> block_fraction;
  /// Explicit subsample size used on every side.
  std::optional<std::int64_t> b;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  /// Treated and control sides of the same period share a random stream.
  bool paired = false;
  /// Worker threads; 0 uses all available (capped by DIFTRANS_THREADS).
  unsigned threads = 0;

  void validate() const;
  /// Subsample size for a side with n units; default floor(n^0.7).
  /// Throws ConfigError unless 1 <= b < n.
  std::int64_t subsample_size(std::int64_t n) const;
};

/// Unit-count PMFs the estimator is evaluated on. Every PMF must carry counts.
struct SampleSet {
  PricePMF treated_pre;
  PricePMF treated_post;
  std::optional<PricePMF> control_pre;
  std::optional<PricePMF> control_post;
};

using Statistic = std::function<double(const SampleSet&)>;

/// OT_d(treated_pre, treated_post).
Statistic before_after_statistic(Bandwidth d);

/// Difference in transports at d; needs both control PMFs.
Statistic dit_statistic(Bandwidth d);

enum class EquilibriumField { kPrice, kCost, kSellerValue, kBuyerValue };

/// Maps the trade share from `share` through the volume inversion. Shares
/// outside (0, max_trade_share] are clamped to that interval's closure, so
/// the map is continuous and defined for every draw.
Statistic equilibrium_statistic(Statistic share, MarketConfig cfg, WtpCurve F,
                                EquilibriumField field);

/// Value of `field` at share s with s clamped to [0, max_trade_share(cfg)].
double clamped_equilibrium_value(const MarketConfig& cfg, const WtpCurve& F, double s,
                                 EquilibriumField field);

struct SubsampleResult {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> draws;
  /// Subsample sizes: treated pre, treated post, control pre, control post
  /// (zero when the side is absent).
  std::array<std::int64_t, 4> sizes{};
};

/// Full-sample point estimate plus percentile interval at (alpha/2,
/// 1 - alpha/2) of the subsample draws. Deterministic in cfg.seed.
SubsampleResult subsample_ci(const SampleSet& samples, const Statistic& statistic,
                             const SubsampleConfig& cfg);

/// Header `draw_index,value`.
void write_draws_csv(std::ostream& out, std::span<const double> draws);

}  // namespace diftrans
