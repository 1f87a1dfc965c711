#include "diftrans/inference.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <utility>

#include "diftrans/error.hpp"
#include "diftrans/estimators.hpp"
#include "diftrans/format.hpp"
#include "diftrans/parallel.hpp"
#include "diftrans/random.hpp"
#include "diftrans/stats.hpp"

namespace diftrans {

void SubsampleConfig::validate() const {
  if (n_draws < 1) throw ConfigError("subsampling needs at least one draw");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (block_fraction && b) throw ConfigError("give either a block fraction or a subsample size");
  if (block_fraction && !(*block_fraction > 0.0 && *block_fraction < 1.0))
    throw ConfigError("block fraction must lie in (0, 1)");
}

std::int64_t SubsampleConfig::subsample_size(std::int64_t n) const {
  std::int64_t size = 0;
  if (b)
    size = *b;
  else if (block_fraction)
    size = static_cast<std::int64_t>(std::floor(*block_fraction * static_cast<double>(n)));
  else
    size = static_cast<std::int64_t>(std::floor(std::pow(static_cast<double>(n), 0.7)));
  if (size < 1 || size >= n)
    throw ConfigError("subsample size " + std::to_string(size) + " must satisfy 1 <= b < n = " +
                      std::to_string(n));
  return size;
}

Statistic before_after_statistic(Bandwidth d) {
  return [d](const SampleSet& s) { return before_after(s.treated_pre, s.treated_post, d); };
}

Statistic dit_statistic(Bandwidth d) {
  return [d](const SampleSet& s) {
    if (!s.control_pre || !s.control_post)
      throw ValidationError("difference in transports needs control data");
    return diff_in_transports(s.treated_pre, s.treated_post, *s.control_pre, *s.control_post,
                              d);
  };
}

double clamped_equilibrium_value(const MarketConfig& cfg, const WtpCurve& F, double s,
                                 EquilibriumField field) {
  s = std::clamp(s, 0.0, max_trade_share(cfg));
  const double v_seller = s <= cfg.z ? 0.0 : F.quantile(s);
  const double v_buyer = std::max(
      v_seller,
      F.quantile(std::clamp(1.0 - s * static_cast<double>(cfg.q) / cfg.buyers(), 0.0, 1.0)));
  switch (field) {
    case EquilibriumField::kPrice: return 0.5 * (v_seller + v_buyer);
    case EquilibriumField::kCost: return 0.5 * (v_buyer - v_seller);
    case EquilibriumField::kSellerValue: return v_seller;
    case EquilibriumField::kBuyerValue: return v_buyer;
  }
  return 0.0;
}

Statistic equilibrium_statistic(Statistic share, MarketConfig cfg, WtpCurve F,
                                EquilibriumField field) {
  cfg.validate();
  return [share = std::move(share), cfg, F = std::move(F), field](const SampleSet& s) {
    return clamped_equilibrium_value(cfg, F, share(s), field);
  };
}

namespace {

const PricePMF& require_counts(const PricePMF& pmf, const char* side) {
  if (!pmf.has_counts())
    throw ValidationError(std::string("subsampling needs unit counts for the ") + side +
                          " sample");
  return pmf;
}

PricePMF subsample(Rng& rng, const PricePMF& pmf, std::int64_t b) {
  std::vector<std::int64_t> support(pmf.support().begin(), pmf.support().end());
  return PricePMF::from_counts(std::move(support),
                               sample_without_replacement(rng, pmf.counts(), b));
}

}  // namespace

SubsampleResult subsample_ci(const SampleSet& samples, const Statistic& statistic,
                             const SubsampleConfig& cfg) {
  cfg.validate();
  if (samples.control_pre.has_value() != samples.control_post.has_value())
    throw ValidationError("control data needs both a pre and a post sample");
  const bool control = samples.control_pre.has_value();

  SubsampleResult out;
  out.sizes[0] = cfg.subsample_size(require_counts(samples.treated_pre, "treated pre").n());
  out.sizes[1] = cfg.subsample_size(require_counts(samples.treated_post, "treated post").n());
  if (control) {
    out.sizes[2] = cfg.subsample_size(require_counts(*samples.control_pre, "control pre").n());
    out.sizes[3] = cfg.subsample_size(require_counts(*samples.control_post, "control post").n());
  }
  out.point = statistic(samples);

  // Stream salts per side; paired runs reuse the treated salts for control.
  const std::uint64_t salts[4] = {0, 1, cfg.paired ? 0u : 2u, cfg.paired ? 1u : 3u};
  const auto draws = static_cast<std::size_t>(cfg.n_draws);
  out.draws.assign(draws, 0.0);
  parallel_for(draws, resolve_threads(cfg.threads), [&](std::size_t r) {
    auto side = [&](const PricePMF& pmf, int k) {
      Rng rng = make_stream(cfg.seed, r, salts[k]);
      return subsample(rng, pmf, out.sizes[k]);
    };
    SampleSet sub{side(samples.treated_pre, 0), side(samples.treated_post, 1), std::nullopt,
                  std::nullopt};
    if (control) {
      sub.control_pre = side(*samples.control_pre, 2);
      sub.control_post = side(*samples.control_post, 3);
    }
    out.draws[r] = statistic(sub);
  });

  std::vector<double> sorted = out.draws;
  std::sort(sorted.begin(), sorted.end());
  out.lower = quantile_sorted(sorted, cfg.alpha / 2.0);
  out.upper = quantile_sorted(sorted, 1.0 - cfg.alpha / 2.0);
  return out;
}

void write_draws_csv(std::ostream& out, std::span<const double> draws) {
  out << "draw_index,value\n";
  for (std::size_t i = 0; i < draws.size(); ++i) out << i << ',' << format_number(draws[i]) << '\n';
}

}  // namespace diftrans
