#include "diftrans/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "csv_util.hpp"
#include "diftrans/error.hpp"
#include "diftrans/format.hpp"
#include "diftrans/parallel.hpp"
#include "diftrans/random.hpp"
#include "diftrans/stats.hpp"

namespace diftrans {

void PlaceboConfig::validate() const {
  if (n_sims < 1) throw ConfigError("placebo n_sims must be at least 1");
  for (double q : quantiles)
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("placebo quantiles must lie in (0, 1)");
}

namespace {

std::string quantile_column(double level) {
  // 0.025 -> q025, 0.5 -> q50, 0.975 -> q975
  std::string digits = format_number(level);
  if (digits.rfind("0.", 0) == 0) digits.erase(0, 2);
  if (digits.size() == 1) digits += '0';
  return "q" + digits;
}

void check_grid(std::span<const Bandwidth> grid) {
  if (grid.empty()) throw ValidationError("bandwidth grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw ValidationError("bandwidth grid must be ascending");
}

}  // namespace

void BandwidthScan::write_csv(std::ostream& out) const {
  out << "d,real_cost,placebo_mean,placebo_sd";
  for (double q : quantile_levels) out << ',' << quantile_column(q);
  out << ",dit\n";
  for (const auto& r : rows) {
    out << r.d.value() << ',' << format_number(r.real_cost) << ','
        << format_number(r.placebo.mean) << ',' << format_number(r.placebo.sd);
    for (double q : r.placebo.quantiles) out << ',' << format_number(q);
    out << ',';
    if (r.dit_value) out << format_number(*r.dit_value);
    out << '\n';
  }
}

double before_after(const PricePMF& pre, const PricePMF& post, Bandwidth d) {
  return ot_cost(pre, post, d);
}

std::vector<PlaceboSummary> placebo_costs(const PricePMF& base, std::int64_t n_pre,
                                          std::int64_t n_post,
                                          std::span<const Bandwidth> grid,
                                          const PlaceboConfig& cfg) {
  cfg.validate();
  check_grid(grid);
  if (n_pre < 1 || n_post < 1) throw ConfigError("placebo sample sizes must be positive");

  const auto sims = static_cast<std::size_t>(cfg.n_sims);
  const std::size_t nd = grid.size();
  // costs[r * nd + k]: replicate r at grid point k.
  std::vector<double> costs(sims * nd);
  const auto support = base.support();
  parallel_for(sims, resolve_threads(cfg.threads), [&](std::size_t r) {
    Rng rng = make_stream(cfg.seed, r);
    const auto draw_pre = sample_multinomial(rng, base.mass(), n_pre);
    const auto draw_post = sample_multinomial(rng, base.mass(), n_post);
    std::vector<double> m_pre(draw_pre.size()), m_post(draw_post.size());
    for (std::size_t i = 0; i < m_pre.size(); ++i) {
      m_pre[i] = static_cast<double>(draw_pre[i]) / static_cast<double>(n_pre);
      m_post[i] = static_cast<double>(draw_post[i]) / static_cast<double>(n_post);
    }
    for (std::size_t k = 0; k < nd; ++k)
      costs[r * nd + k] = ot_cost(support, m_pre, support, m_post, grid[k].value());
  });

  std::vector<PlaceboSummary> out(nd);
  std::vector<double> column(sims);
  for (std::size_t k = 0; k < nd; ++k) {
    for (std::size_t r = 0; r < sims; ++r) column[r] = costs[r * nd + k];
    out[k].mean = mean(column);
    out[k].sd = stddev(column);
    out[k].quantiles = quantiles(column, cfg.quantiles);
  }
  return out;
}

PlaceboSummary placebo_cost(const PricePMF& base, std::int64_t n_pre, std::int64_t n_post,
                            Bandwidth d, const PlaceboConfig& cfg) {
  const Bandwidth grid[] = {d};
  return placebo_costs(base, n_pre, n_post, grid, cfg).front();
}

Bandwidth select_bandwidth(std::span<const Bandwidth> grid,
                           std::span<const PlaceboSummary> placebo,
                           std::span<const double> quantile_levels, double threshold,
                           SelectionRule rule) {
  check_grid(grid);
  if (grid.size() != placebo.size())
    throw ValidationError("grid and placebo summaries differ in length");
  std::optional<std::size_t> level_index;
  if (rule.quantile_level) {
    const auto it =
        std::find(quantile_levels.begin(), quantile_levels.end(), *rule.quantile_level);
    if (it == quantile_levels.end())
      throw ConfigError("selection quantile " + format_number(*rule.quantile_level) +
                        " was not computed");
    level_index = static_cast<std::size_t>(it - quantile_levels.begin());
  }
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double stat =
        level_index ? placebo[k].quantiles.at(*level_index) : placebo[k].mean;
    if (stat < threshold) return grid[k];
    smallest = std::min(smallest, stat);
  }
  throw SelectionError("no bandwidth in the grid has placebo cost below " +
                       format_number(threshold) + "; smallest placebo " +
                       (level_index ? "quantile" : "mean") + " was " +
                       format_number(smallest));
}

Bandwidth select_bandwidth(const PricePMF& base, std::int64_t n_pre, std::int64_t n_post,
                           std::span<const Bandwidth> grid, const PlaceboConfig& cfg,
                           double threshold, SelectionRule rule) {
  const auto placebo = placebo_costs(base, n_pre, n_post, grid, cfg);
  return select_bandwidth(grid, placebo, cfg.quantiles, threshold, rule);
}

double diff_in_transports(const PricePMF& treated_pre, const PricePMF& treated_post,
                          const PricePMF& control_pre, const PricePMF& control_post,
                          Bandwidth d) {
  return ot_cost(treated_pre, treated_post, d.doubled()) -
         ot_cost(control_pre, control_post, d);
}

BandwidthScan bandwidth_scan(const PricePMF& pre, const PricePMF& post,
                             std::span<const Bandwidth> grid, const PricePMF& placebo_base,
                             const PlaceboConfig& cfg, std::optional<ControlPair> control) {
  const auto placebo = placebo_costs(placebo_base, pre.n(), post.n(), grid, cfg);
  BandwidthScan scan;
  scan.quantile_levels = cfg.quantiles;
  scan.rows.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    ScanRow row;
    row.d = grid[k];
    row.real_cost = ot_cost(pre, post, grid[k]);
    row.placebo = placebo[k];
    if (control)
      row.dit_value = diff_in_transports(pre, post, control->pre, control->post, grid[k]);
    scan.rows.push_back(std::move(row));
  }
  return scan;
}

std::pair<Bandwidth, double> select_dstar(const BandwidthScan& scan, Bandwidth d_min) {
  std::optional<std::pair<Bandwidth, double>> best;
  for (const auto& r : scan.rows) {
    if (r.d < d_min) continue;
    if (!r.dit_value)
      throw ValidationError("scan row d=" + std::to_string(r.d.value()) +
                            " has no difference-in-transports value");
    if (!best || *r.dit_value > best->second ||
        (*r.dit_value == best->second && r.d < best->first))
      best = std::pair{r.d, *r.dit_value};
  }
  if (!best)
    throw SelectionError("no scan row with d >= " + std::to_string(d_min.value()));
  return *best;
}

Bandwidth d_floor(Bandwidth placebo_rule_d, Bandwidth displacement_rule_d) {
  return std::max(placebo_rule_d, displacement_rule_d);
}

std::vector<DisplacementRow> equal_displacement_curves(const PricePMF& a_pre,
                                                       const PricePMF& a_post,
                                                       const PricePMF& b_pre,
                                                       const PricePMF& b_post,
                                                       std::span<const Bandwidth> grid) {
  check_grid(grid);
  std::vector<DisplacementRow> out;
  out.reserve(grid.size());
  for (const auto d : grid) {
    DisplacementRow row;
    row.d = d;
    row.cost_a = ot_cost(a_pre, a_post, d);
    row.cost_b = ot_cost(b_pre, b_post, d);
    row.difference = row.cost_a - row.cost_b;
    out.push_back(row);
  }
  return out;
}

Bandwidth equal_displacement_floor(std::span<const DisplacementRow> curves,
                                   double tolerance) {
  if (curves.empty()) throw ValidationError("displacement curves are empty");
  std::optional<Bandwidth> floor;
  for (std::size_t k = curves.size(); k-- > 0;) {
    if (!(std::abs(curves[k].difference) < tolerance)) break;
    floor = curves[k].d;
  }
  if (!floor)
    throw SelectionError("equal displacement fails at the largest grid bandwidth (|difference| = " +
                         format_number(std::abs(curves.back().difference)) + ")");
  return *floor;
}

void write_displacement_csv(std::ostream& out, std::span<const DisplacementRow> rows) {
  out << "d,cost_a,cost_b,difference\n";
  for (const auto& r : rows)
    out << r.d.value() << ',' << format_number(r.cost_a) << ',' << format_number(r.cost_b)
        << ',' << format_number(r.difference) << '\n';
}

std::vector<Bandwidth> parse_grid(const std::string& spec) {
  std::vector<Bandwidth> grid;
  if (spec.find(':') != std::string::npos) {
    std::vector<std::int64_t> parts;
    std::istringstream in(spec);
    std::string item;
    while (std::getline(in, item, ':')) {
      const auto v = detail::parse_int(item);
      if (!v) throw ParseError("bad grid specification '" + spec + "'");
      parts.push_back(*v);
    }
    if (parts.size() != 3 || parts[2] <= 0 || parts[1] < parts[0])
      throw ParseError("grid must be lo:hi:step with step > 0, got '" + spec + "'");
    for (std::int64_t d = parts[0]; d <= parts[1]; d += parts[2]) grid.emplace_back(d);
  } else {
    std::istringstream in(spec);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (detail::trim(item).empty()) continue;
      const auto v = detail::parse_int(item);
      if (!v) throw ParseError("bad grid specification '" + spec + "'");
      grid.emplace_back(*v);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }
  if (grid.empty()) throw ParseError("empty grid specification");
  return grid;
}

}  // namespace diftrans
