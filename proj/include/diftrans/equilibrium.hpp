#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace diftrans {

/// Willingness-to-pay schedule v(n): a piecewise-linear, strictly decreasing
/// curve from v(0) = v_max down to v(n_max) = 0. Seen as a distribution,
/// F(v) = 1 - v^{-1}(v) / n_max is continuous and strictly increasing on
/// [0, v_max] with piecewise-constant density.
class WtpCurve {
 public:
  struct Knot {
    double n = 0.0;
    double v = 0.0;
  };

  enum class Strictify {
    kReject,   // equal consecutive values are an error
    kPerturb,  // raise ties by 1e-6 * v_max so the curve is strictly decreasing
  };

  static WtpCurve from_knots(std::vector<Knot> knots, Strictify mode = Strictify::kReject);

  /// Reads a CSV with header `n,v`.
  static WtpCurve load_csv(const std::filesystem::path& path,
                           Strictify mode = Strictify::kReject);
  static WtpCurve load_csv(std::istream& in, Strictify mode = Strictify::kReject);

  /// Uniform valuations on [0, v_max].
  static WtpCurve uniform(double v_max);

  /// F(v), clamped to 0 below zero and 1 above v_max.
  double cdf(double v) const;
  /// F^{-1}(u) for u in [0, 1].
  double quantile(double u) const;
  /// f(v) on the segment containing v (a knot value belongs to the segment above it);
  /// zero outside (0, v_max).
  double density(double v) const;
  /// v(n) for n in [0, n_max].
  double value_at(double n) const;

  double v_max() const { return knots_.front().v; }
  double n_max() const { return knots_.back().n; }
  const std::vector<Knot>& knots() const { return knots_; }

 private:
  explicit WtpCurve(std::vector<Knot> knots) : knots_(std::move(knots)) {}
  std::vector<Knot> knots_;
};

/// Market size, quota and speculator share.
struct MarketConfig {
  std::int64_t N = 700000;
  std::int64_t q = 260000;
  double z = 0.0;

  void validate() const;
  /// Number of rationed prospective buyers, N - q(1 - z).
  double buyers() const;
};

struct MarketSolution {
  double s = 0.0;
  double p = 0.0;
  double t = 0.0;
  double v_seller = 0.0;
  double v_buyer = 0.0;
  double gross_gains = 0.0;
  double tc_total = 0.0;
  double net_gains = 0.0;
  double tc_share = 0.0;
  /// Set by bounds_table when a price floor is supplied: p >= floor.
  std::optional<bool> meets_price_floor;
};

/// Buyers willing to pay p + t: (N - q(1 - z)) (1 - F(p + t)).
double demand(const MarketConfig& cfg, const WtpCurve& F, double p, double t);

/// Sellers willing to sell at p - t. Without speculators q F(p - t); with a
/// speculator share z <= s, zq + ((s - z) / s) q F(p - t).
double supply(const MarketConfig& cfg, const WtpCurve& F, double p, double t, double s);

struct NoTcEquilibrium {
  double p_notc = 0.0;
  double s_notc = 0.0;
};

/// Frictionless equilibrium. s_notc = (N - q) / N whatever the curve; p_notc
/// solves q F(p) = (N - q)(1 - F(p)) by bisection. Requires z = 0.
NoTcEquilibrium solve_no_tc(const MarketConfig& cfg, const WtpCurve& F);

/// Largest trade share with v_seller <= v_buyer when sellers are lottery
/// winners: M / (M + q) with M = N - q(1 - z); (N - q) / N when z = 0.
double max_trade_share(const MarketConfig& cfg);

/// Recovers marginal valuations, price, transaction cost and gains at trade
/// share s. Throws InfeasibleError above the frictionless share and
/// DomainError for s <= 0.
MarketSolution invert_from_volume(const MarketConfig& cfg, const WtpCurve& F, double s);

/// Fills gross gains (area between inverse demand and inverse supply up to
/// sq), transaction-cost total 2tsq, net gains and cost share. Needs s and t.
MarketSolution gains_from_trade(const MarketConfig& cfg, const WtpCurve& F,
                                MarketSolution sol);

/// One solution per share; flags rows against `price_floor` when given.
std::vector<MarketSolution> bounds_table(const MarketConfig& cfg, const WtpCurve& F,
                                         std::span<const double> s_values,
                                         std::optional<double> price_floor = std::nullopt);

struct ComparativeStatics {
  double dp_ds = 0.0;
  double dt_ds = 0.0;
};

/// Analytic derivatives of p(s) and t(s). Throws DomainError when the density
/// vanishes at either marginal valuation.
ComparativeStatics comparative_statics(const MarketConfig& cfg, const WtpCurve& F, double s);

/// Market clearing for a given transaction cost (z = 0): the price at which
/// demand equals supply, and the implied trade share supply / q.
struct Clearing {
  double p = 0.0;
  double s = 0.0;
};
Clearing clear_market(const MarketConfig& cfg, const WtpCurve& F, double t);

}  // namespace diftrans
