#include "diftrans/equilibrium.hpp"

#include <algorithm>
#include <cmath>

#include "diftrans/error.hpp"
#include "diftrans/format.hpp"
#include "diftrans/parallel.hpp"

namespace diftrans {

void MarketConfig::validate() const {
  if (N <= 0 || q <= 0) throw ConfigError("market size and quota must be positive");
  if (q >= N) throw ConfigError("quota must be smaller than the market size");
  if (!(z >= 0.0 && z <= 1.0)) throw ConfigError("speculator share must lie in [0, 1]");
}

double MarketConfig::buyers() const {
  return static_cast<double>(N) - static_cast<double>(q) * (1.0 - z);
}

double demand(const MarketConfig& cfg, const WtpCurve& F, double p, double t) {
  return cfg.buyers() * (1.0 - F.cdf(p + t));
}

double supply(const MarketConfig& cfg, const WtpCurve& F, double p, double t, double s) {
  const double q = static_cast<double>(cfg.q);
  if (cfg.z == 0.0) return q * F.cdf(p - t);
  if (cfg.z > s) throw ConfigError("speculator share exceeds trade share");
  return cfg.z * q + ((s - cfg.z) / s) * q * F.cdf(p - t);
}

Clearing clear_market(const MarketConfig& cfg, const WtpCurve& F, double t) {
  cfg.validate();
  if (cfg.z != 0.0) throw ConfigError("market clearing is defined without speculators");
  if (!(t >= 0.0)) throw DomainError("transaction cost must be nonnegative");
  double lo = t;
  double hi = F.v_max() + t;
  auto excess = [&](double p) { return demand(cfg, F, p, t) - supply(cfg, F, p, t, 0.0); };
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  const double p = 0.5 * (lo + hi);
  return {p, F.cdf(p - t)};
}

NoTcEquilibrium solve_no_tc(const MarketConfig& cfg, const WtpCurve& F) {
  cfg.validate();
  if (cfg.z != 0.0) throw ConfigError("the frictionless equilibrium is defined without speculators");
  const auto c = clear_market(cfg, F, 0.0);
  return {c.p, static_cast<double>(cfg.N - cfg.q) / static_cast<double>(cfg.N)};
}

double max_trade_share(const MarketConfig& cfg) {
  cfg.validate();
  if (cfg.z == 0.0) return static_cast<double>(cfg.N - cfg.q) / static_cast<double>(cfg.N);
  const double m = cfg.buyers();
  return m / (m + static_cast<double>(cfg.q));
}

MarketSolution invert_from_volume(const MarketConfig& cfg, const WtpCurve& F, double s) {
  cfg.validate();
  if (!(s > 0.0)) throw DomainError("trade share must be positive, got " + format_number(s));
  const double s_max = max_trade_share(cfg);
  if (s > s_max)
    throw InfeasibleError("trade share " + format_number(s) +
                          " exceeds the frictionless share " + format_number(s_max));
  if (cfg.z > s) throw ConfigError("speculator share exceeds trade share");

  const double q = static_cast<double>(cfg.q);
  MarketSolution sol;
  sol.s = s;
  sol.v_seller = cfg.z == s ? 0.0 : F.quantile(s);
  sol.v_buyer = F.quantile(std::clamp(1.0 - s * q / cfg.buyers(), 0.0, 1.0));
  sol.v_buyer = std::max(sol.v_buyer, sol.v_seller);
  sol.p = 0.5 * (sol.v_seller + sol.v_buyer);
  sol.t = 0.5 * (sol.v_buyer - sol.v_seller);
  return gains_from_trade(cfg, F, sol);
}

MarketSolution gains_from_trade(const MarketConfig& cfg, const WtpCurve& F, MarketSolution sol) {
  cfg.validate();
  const double q = static_cast<double>(cfg.q);
  const double m = cfg.buyers();
  const double s = sol.s;
  const double z = cfg.z;
  const double upper = s * q;

  auto inverse_supply = [&](double u) {
    if (z == 0.0) return F.quantile(std::clamp(u / q, 0.0, 1.0));
    if (u <= z * q || s <= z) return 0.0;
    return F.quantile(std::clamp((u - z * q) * s / ((s - z) * q), 0.0, 1.0));
  };
  auto integrand = [&](double u) {
    return F.quantile(std::clamp(1.0 - u / m, 0.0, 1.0)) - inverse_supply(u);
  };
  auto trapezoid = [&](long panels) {
    const double h = upper / static_cast<double>(panels);
    double acc = 0.5 * (integrand(0.0) + integrand(upper));
    for (long i = 1; i < panels; ++i) acc += integrand(h * static_cast<double>(i));
    return acc * h;
  };

  double gross = 0.0;
  if (upper > 0.0) {
    constexpr long kMaxPanels = 1L << 24;
    long panels = 10000;
    double coarse = trapezoid(panels);
    for (;;) {
      panels *= 2;
      const double fine = trapezoid(panels);
      const bool converged = std::abs(fine - coarse) / 3.0 <= 1e-6 * std::abs(fine);
      coarse = fine;
      if (converged || panels >= kMaxPanels) break;
    }
    gross = coarse;
  }

  sol.gross_gains = gross;
  sol.tc_total = 2.0 * sol.t * s * q;
  sol.net_gains = sol.gross_gains - sol.tc_total;
  sol.tc_share = sol.gross_gains > 0.0 ? sol.tc_total / sol.gross_gains : 0.0;
  return sol;
}

std::vector<MarketSolution> bounds_table(const MarketConfig& cfg, const WtpCurve& F,
                                         std::span<const double> s_values,
                                         std::optional<double> price_floor) {
  std::vector<MarketSolution> rows(s_values.size());
  parallel_for(s_values.size(), resolve_threads(), [&](std::size_t i) {
    rows[i] = invert_from_volume(cfg, F, s_values[i]);
    if (price_floor) rows[i].meets_price_floor = rows[i].p >= *price_floor;
  });
  return rows;
}

ComparativeStatics comparative_statics(const MarketConfig& cfg, const WtpCurve& F, double s) {
  const auto sol = invert_from_volume(cfg, F, s);
  const double fs = F.density(sol.v_seller);
  const double fb = F.density(sol.v_buyer);
  if (!(fs > 0.0) || !(fb > 0.0))
    throw DomainError("density vanishes at a marginal valuation; derivative undefined at s = " +
                      format_number(s));
  const double ratio = static_cast<double>(cfg.q) / cfg.buyers();
  return {0.5 * (1.0 / fs - ratio / fb), -0.5 * (ratio / fb + 1.0 / fs)};
}

}  // namespace diftrans
