#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "diftrans/baseline.hpp"
#include "diftrans/equilibrium.hpp"
#include "diftrans/error.hpp"
#include "diftrans/estimators.hpp"
#include "diftrans/format.hpp"
#include "diftrans/inference.hpp"
#include "diftrans/pmf.hpp"
#include "diftrans/transport.hpp"
#include "digest.hpp"

namespace diftrans::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kToolVersion = DIFTRANS_VERSION;

// ---------------------------------------------------------------------------
// Shared helpers

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size())
      throw ParseError(flag + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ParseError(flag + " needs at least one value");
  return out;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json grid_json(std::span<const Bandwidth> grid) {
  json a = json::array();
  for (const auto d : grid) a.push_back(d.value());
  return a;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

/// Manifest embedded in every report. Thread counts and output paths are
/// left out so reruns compare byte for byte.
json make_manifest(const std::string& command, json config,
                   const std::vector<fs::path>& inputs, std::optional<std::uint64_t> seed) {
  json m;
  m["command"] = command;
  m["tool_version"] = kToolVersion;
  if (seed) m["seed"] = *seed;
  m["config"] = std::move(config);
  json files = json::array();
  for (const auto& p : inputs) files.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  m["inputs"] = std::move(files);
  return m;
}

void emit(const json& report, const std::string& output, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (output.empty()) {
    out << text;
  } else {
    write_file(output, [&](std::ostream& o) { o << text; });
  }
}

struct Window {
  std::string ranges;
  std::string exclude;
  PeriodFilter filter() const { return PeriodFilter::parse(ranges, exclude); }
  json to_json() const { return filter().describe(); }
};

void add_window(CLI::App* app, Window& w, const std::string& name, bool required,
                const std::string& what) {
  auto* opt = app->add_option("--" + name, w.ranges,
                              what + " months: YYYY-MM or YYYY-MM:YYYY-MM, comma separated");
  if (required) opt->required();
  app->add_option("--" + name + "-exclude", w.exclude,
                  "months removed from --" + name + ", comma separated YYYY-MM");
}

void add_threads(CLI::App* app, unsigned& threads) {
  app->add_option("--threads", threads,
                  "worker threads, 0 for all available (capped by DIFTRANS_THREADS); "
                  "does not change output")
      ->default_val(0);
}

json scan_rows_json(const BandwidthScan& scan) {
  json rows = json::array();
  for (const auto& r : scan.rows) {
    json row;
    row["d"] = r.d.value();
    row["real_cost"] = r.real_cost;
    row["placebo_mean"] = r.placebo.mean;
    row["placebo_sd"] = r.placebo.sd;
    json q = json::array();
    for (double v : r.placebo.quantiles) q.push_back(v);
    row["placebo_quantiles"] = std::move(q);
    row["dit"] = r.dit_value ? json(*r.dit_value) : json(nullptr);
    rows.push_back(std::move(row));
  }
  return rows;
}

json pmf_summary(const PricePMF& pmf) {
  return {{"n", pmf.n()},
          {"support_size", pmf.size()},
          {"min_price", pmf.support().front()},
          {"max_price", pmf.support().back()}};
}

// ---------------------------------------------------------------------------
// ingest

struct IngestOptions {
  std::string input;
  std::string city;
  Window window;
  std::string pmf_csv;
  std::string output;
};

void run_ingest(const IngestOptions& o, std::ostream& out) {
  const auto records = ingest_csv(o.input);
  struct CityStats {
    std::int64_t rows = 0;
    std::int64_t units = 0;
    std::optional<YearMonth> first, last;
  };
  std::map<std::string, CityStats> cities;
  std::int64_t units = 0;
  for (const auto& r : records) {
    auto& c = cities[r.city];
    ++c.rows;
    c.units += r.quantity;
    units += r.quantity;
    if (!c.first || r.period() < *c.first) c.first = r.period();
    if (!c.last || *c.last < r.period()) c.last = r.period();
  }

  json config{{"input", o.input}, {"city", o.city}, {"period", o.window.to_json()}};
  json report;
  report["manifest"] = make_manifest("ingest", config, {o.input}, std::nullopt);
  report["records"] = records.size();
  report["units"] = units;
  json cj = json::array();
  for (const auto& [name, c] : cities)
    cj.push_back({{"city", name},
                  {"rows", c.rows},
                  {"units", c.units},
                  {"first_month", c.first->to_string()},
                  {"last_month", c.last->to_string()}});
  report["cities"] = std::move(cj);

  if (!o.city.empty()) {
    const auto pmf = build_pmf(records, o.city, o.window.filter());
    report["pmf"] = pmf_summary(pmf);
    if (!o.pmf_csv.empty())
      write_file(o.pmf_csv, [&](std::ostream& f) {
        f << "price,count,mass\n";
        for (std::size_t i = 0; i < pmf.size(); ++i)
          f << pmf.support()[i] << ',' << pmf.counts()[i] << ',' << format_number(pmf.mass()[i])
            << '\n';
      });
  } else if (!o.pmf_csv.empty()) {
    throw ConfigError("--pmf-csv needs --city");
  }
  emit(report, o.output, out);
}

// ---------------------------------------------------------------------------
// transport

struct TransportOptions {
  std::string input;
  std::string city;
  Window pre, post;
  std::int64_t d = 0;
  double lambda = 0.0;
  std::string plan_csv;
  std::string output;
};

void run_transport(const TransportOptions& o, std::ostream& out) {
  const auto records = ingest_csv(o.input);
  const auto pre = build_pmf(records, o.city, o.pre.filter());
  const auto post = build_pmf(records, o.city, o.post.filter());
  const Bandwidth d(o.d);

  json config{{"input", o.input}, {"city", o.city},         {"pre", o.pre.to_json()},
              {"post", o.post.to_json()}, {"d", o.d}, {"lambda", o.lambda}};
  json report;
  report["manifest"] = make_manifest("transport", config, {o.input}, std::nullopt);
  report["cost"] = ot_cost(pre, post, d);
  report["d"] = o.d;
  report["n_pre"] = pre.n();
  report["n_post"] = post.n();

  if (!o.plan_csv.empty() || o.lambda > 0.0) {
    const auto plan = o.lambda > 0.0 ? solve_ot_regularized(pre, post, d, o.lambda)
                                     : solve_ot(pre, post, d);
    report["plan"] = {{"entries", plan.entries.size()},
                      {"indicator_cost", plan.cost},
                      {"regularization", plan.regularization},
                      {"mean_displacement", plan.displacement()}};
    if (!o.plan_csv.empty())
      write_file(o.plan_csv, [&](std::ostream& f) { write_plan_csv(f, plan); });
  }
  emit(report, o.output, out);
}

// ---------------------------------------------------------------------------
// scan

struct PlaceboOptions {
  int n_sims = 500;
  std::uint64_t seed = 0;
  std::string quantiles = "0.025,0.25,0.5,0.75,0.975";
  double threshold = kDefaultPlaceboThreshold;
  std::optional<double> select_quantile;
  std::string placebo_city;
  Window placebo_period;
  unsigned threads = 0;

  PlaceboConfig config() const {
    PlaceboConfig c;
    c.n_sims = n_sims;
    c.seed = seed;
    c.quantiles = parse_double_list(quantiles, "--quantiles");
    c.threads = threads;
    c.validate();
    return c;
  }

  json to_json(const std::string& default_city, const Window& default_period) const {
    return {{"n_sims", n_sims},
            {"quantiles", config().quantiles},
            {"threshold", threshold},
            {"select_quantile", select_quantile ? json(*select_quantile) : json(nullptr)},
            {"placebo_city", placebo_city.empty() ? default_city : placebo_city},
            {"placebo_period", placebo_period.ranges.empty() ? default_period.to_json()
                                                              : placebo_period.to_json()}};
  }

  PricePMF base(std::span<const SalesRecord> records, const std::string& default_city,
                const Window& default_period) const {
    const auto& city = placebo_city.empty() ? default_city : placebo_city;
    const auto& period = placebo_period.ranges.empty() ? default_period : placebo_period;
    return build_pmf(records, city, period.filter());
  }
};

void add_placebo(CLI::App* app, PlaceboOptions& p, const std::string& base_note) {
  app->add_option("--n-sims", p.n_sims, "placebo replicates")->default_val(500);
  app->add_option("--seed", p.seed, "random seed")->default_val(0);
  app->add_option("--quantiles", p.quantiles, "placebo quantile levels, comma separated")
      ->default_val(p.quantiles);
  app->add_option("--threshold", p.threshold, "placebo cost threshold of the bandwidth rule")
      ->default_val(kDefaultPlaceboThreshold);
  app->add_option("--select-quantile", p.select_quantile,
                  "compare this placebo quantile instead of the mean to the threshold");
  app->add_option("--placebo-city", p.placebo_city, "city of the placebo base distribution; " +
                                                        base_note);
  add_window(app, p.placebo_period, "placebo-period", false,
             "base distribution for the placebo resamples; " + base_note);
  add_threads(app, p.threads);
}

struct ScanOptions {
  std::string input;
  std::string city;
  Window pre, post;
  std::string grid;
  PlaceboOptions placebo;
  std::string scan_csv;
  std::string output;
};

int run_scan(const ScanOptions& o, std::ostream& out, std::ostream& err) {
  const auto records = ingest_csv(o.input);
  const auto pre = build_pmf(records, o.city, o.pre.filter());
  const auto post = build_pmf(records, o.city, o.post.filter());
  const auto grid = parse_grid(o.grid);
  const auto cfg = o.placebo.config();
  const auto base = o.placebo.base(records, o.city, o.pre);

  const auto scan = bandwidth_scan(pre, post, grid, base, cfg);
  if (!o.scan_csv.empty()) write_file(o.scan_csv, [&](std::ostream& f) { scan.write_csv(f); });

  json config{{"input", o.input},
              {"city", o.city},
              {"pre", o.pre.to_json()},
              {"post", o.post.to_json()},
              {"grid", grid_json(grid)},
              {"placebo", o.placebo.to_json(o.city, o.pre)}};
  json report;
  report["manifest"] = make_manifest("scan", config, {o.input}, cfg.seed);
  report["n_pre"] = pre.n();
  report["n_post"] = post.n();

  int code = 0;
  std::vector<PlaceboSummary> placebo;
  for (const auto& r : scan.rows) placebo.push_back(r.placebo);
  try {
    const auto d = select_bandwidth(grid, placebo, cfg.quantiles, o.placebo.threshold,
                                    SelectionRule{o.placebo.select_quantile});
    const auto row = std::find_if(scan.rows.begin(), scan.rows.end(),
                                  [&](const ScanRow& r) { return r.d == d; });
    report["selection"] = {{"d", d.value()}, {"real_cost", row->real_cost}};
  } catch (const SelectionError& e) {
    report["selection"] = {{"error", e.what()}};
    err << "error: " << e.what() << '\n';
    code = 1;
  }
  report["rows"] = scan_rows_json(scan);
  emit(report, o.output, out);
  return code;
}

// ---------------------------------------------------------------------------
// dit

struct DitOptions {
  std::string input;
  std::string treated, control;
  Window pre, post;
  std::string grid;
  PlaceboOptions placebo;
  std::string d_min = "auto";
  double tolerance = kDefaultDisplacementTolerance;
  Window diagnostic_pre, diagnostic_post;
  std::string curve_csv;
  std::string displacement_csv;
  std::string output;
};

void run_dit(const DitOptions& o, std::ostream& out) {
  const auto records = ingest_csv(o.input);
  const auto t_pre = build_pmf(records, o.treated, o.pre.filter());
  const auto t_post = build_pmf(records, o.treated, o.post.filter());
  const auto c_pre = build_pmf(records, o.control, o.pre.filter());
  const auto c_post = build_pmf(records, o.control, o.post.filter());
  const auto grid = parse_grid(o.grid);
  const auto cfg = o.placebo.config();
  const auto base = o.placebo.base(records, o.treated, o.pre);

  const auto scan = bandwidth_scan(t_pre, t_post, grid, base, cfg, ControlPair{c_pre, c_post});
  if (!o.curve_csv.empty()) write_file(o.curve_csv, [&](std::ostream& f) { scan.write_csv(f); });

  const bool diagnostic = !o.diagnostic_pre.ranges.empty() || !o.diagnostic_post.ranges.empty();
  if (diagnostic && (o.diagnostic_pre.ranges.empty() || o.diagnostic_post.ranges.empty()))
    throw ConfigError("--diagnostic-pre and --diagnostic-post go together");
  std::vector<DisplacementRow> displacement;
  if (diagnostic) {
    displacement = equal_displacement_curves(
        build_pmf(records, o.treated, o.diagnostic_pre.filter()),
        build_pmf(records, o.treated, o.diagnostic_post.filter()),
        build_pmf(records, o.control, o.diagnostic_pre.filter()),
        build_pmf(records, o.control, o.diagnostic_post.filter()), grid);
    if (!o.displacement_csv.empty())
      write_file(o.displacement_csv,
                 [&](std::ostream& f) { write_displacement_csv(f, displacement); });
  } else if (!o.displacement_csv.empty()) {
    throw ConfigError("--displacement-csv needs --diagnostic-pre and --diagnostic-post");
  }

  json floor;
  Bandwidth d_min;
  if (o.d_min == "auto") {
    std::vector<PlaceboSummary> placebo;
    for (const auto& r : scan.rows) placebo.push_back(r.placebo);
    const auto placebo_d = select_bandwidth(grid, placebo, cfg.quantiles, o.placebo.threshold,
                                            SelectionRule{o.placebo.select_quantile});
    const auto displacement_d =
        diagnostic ? equal_displacement_floor(displacement, o.tolerance) : grid.front();
    d_min = d_floor(placebo_d, displacement_d);
    floor = {{"rule", "auto"},
             {"placebo_d", placebo_d.value()},
             {"displacement_d", diagnostic ? json(displacement_d.value()) : json(nullptr)},
             {"d_floor", d_min.value()}};
  } else {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(o.d_min.data(), o.d_min.data() + o.d_min.size(), v);
    if (ec != std::errc() || ptr != o.d_min.data() + o.d_min.size())
      throw ParseError("--d-min must be 'auto' or an integer");
    d_min = Bandwidth(v);
    floor = {{"rule", "explicit"}, {"d_floor", v}};
  }
  const auto [d_star, s_dit] = select_dstar(scan, d_min);

  json config{{"input", o.input},
              {"treated", o.treated},
              {"control", o.control},
              {"pre", o.pre.to_json()},
              {"post", o.post.to_json()},
              {"grid", grid_json(grid)},
              {"placebo", o.placebo.to_json(o.treated, o.pre)},
              {"d_min", o.d_min},
              {"tolerance", o.tolerance},
              {"diagnostic_pre", diagnostic ? o.diagnostic_pre.to_json() : json(nullptr)},
              {"diagnostic_post", diagnostic ? o.diagnostic_post.to_json() : json(nullptr)}};
  json report;
  report["manifest"] = make_manifest("dit", config, {o.input}, cfg.seed);
  report["d_star"] = d_star.value();
  report["s_dit"] = s_dit;
  report["floor"] = std::move(floor);
  report["rows"] = scan_rows_json(scan);
  if (diagnostic) {
    json rows = json::array();
    for (const auto& r : displacement)
      rows.push_back({{"d", r.d.value()},
                      {"cost_a", r.cost_a},
                      {"cost_b", r.cost_b},
                      {"difference", r.difference}});
    report["displacement"] = std::move(rows);
  }
  emit(report, o.output, out);
}

// ---------------------------------------------------------------------------
// equilibrium

struct CurveOptions {
  std::string wtp;
  std::optional<double> uniform_vmax;
  bool perturb_ties = false;
  std::int64_t N = 700000;
  std::int64_t q = 260000;
  double z = 0.0;

  WtpCurve curve() const {
    if (wtp.empty() == !uniform_vmax.has_value())
      throw ConfigError("give exactly one of --wtp and --uniform-vmax");
    if (uniform_vmax) return WtpCurve::uniform(*uniform_vmax);
    return WtpCurve::load_csv(wtp, perturb_ties ? WtpCurve::Strictify::kPerturb
                                                : WtpCurve::Strictify::kReject);
  }
  MarketConfig market() const {
    MarketConfig m{N, q, z};
    m.validate();
    return m;
  }
  std::vector<fs::path> inputs() const {
    if (wtp.empty()) return {};
    return {wtp};
  }
  json to_json() const {
    return {{"wtp", wtp.empty() ? json(nullptr) : json(wtp)},
            {"uniform_vmax", uniform_vmax ? json(*uniform_vmax) : json(nullptr)},
            {"perturb_ties", perturb_ties},
            {"market_size", N},
            {"quota", q},
            {"speculator_share", z}};
  }
};

void add_curve(CLI::App* app, CurveOptions& c) {
  auto* wtp = app->add_option("--wtp", c.wtp, "willingness-to-pay CSV with header n,v")
                  ->check(CLI::ExistingFile);
  app->add_option("--uniform-vmax", c.uniform_vmax,
                  "use uniform valuations on [0, v] instead of a curve file")
      ->excludes(wtp);
  app->add_flag("--perturb-ties", c.perturb_ties,
                "raise equal consecutive curve values by 1e-6 v_max instead of rejecting them");
  app->add_option("--market-size", c.N, "market size N")->default_val(700000);
  app->add_option("--quota", c.q, "license quota q")->default_val(260000);
  app->add_option("--speculator-share", c.z, "speculator share z of the quota")
      ->default_val(0.0);
}

struct EquilibriumOptions {
  CurveOptions curve;
  std::string s;
  std::optional<double> price_floor;
  std::string table_csv;
  std::string output;
};

std::vector<double> parse_shares(const std::string& text, const MarketConfig& m) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "max") {
      out.push_back(max_trade_share(m));
    } else {
      const auto v = parse_double_list(item, "--s");
      out.insert(out.end(), v.begin(), v.end());
    }
  }
  if (out.empty()) throw ParseError("--s needs at least one value");
  return out;
}

json solution_json(const MarketConfig& m, const WtpCurve& F, const MarketSolution& s) {
  json row{{"s", s.s},
           {"p", s.p},
           {"t", s.t},
           {"v_seller", s.v_seller},
           {"v_buyer", s.v_buyer},
           {"gross_gains", s.gross_gains},
           {"tc_total", s.tc_total},
           {"net_gains", s.net_gains},
           {"tc_share", s.tc_share}};
  if (s.meets_price_floor) row["meets_price_floor"] = *s.meets_price_floor;
  row["rmb_thousand"] = {{"p", s.p / 1e3}, {"t", s.t / 1e3}};
  row["rmb_billion"] = {
      {"gross_gains", s.gross_gains / 1e9}, {"tc_total", s.tc_total / 1e9}, {"net_gains", s.net_gains / 1e9}};
  try {
    const auto cs = comparative_statics(m, F, s.s);
    row["comparative_statics"] = {{"dp_ds", cs.dp_ds}, {"dt_ds", cs.dt_ds}};
  } catch (const DomainError& e) {
    row["comparative_statics"] = {{"error", e.what()}};
  }
  return row;
}

void run_equilibrium(const EquilibriumOptions& o, std::ostream& out) {
  const auto F = o.curve.curve();
  const auto m = o.curve.market();
  const auto shares = parse_shares(o.s, m);
  const auto rows = bounds_table(m, F, shares, o.price_floor);

  json market{{"N", m.N}, {"q", m.q}, {"z", m.z}, {"max_trade_share", max_trade_share(m)}};
  if (m.z == 0.0) {
    const auto notc = solve_no_tc(m, F);
    market["p_notc"] = notc.p_notc;
    market["s_notc"] = notc.s_notc;
  }
  json config = o.curve.to_json();
  config["s"] = shares;
  config["price_floor"] = o.price_floor ? json(*o.price_floor) : json(nullptr);
  json report;
  report["manifest"] = make_manifest("equilibrium", config, o.curve.inputs(), std::nullopt);
  report["market"] = std::move(market);
  json jr = json::array();
  for (const auto& r : rows) jr.push_back(solution_json(m, F, r));
  report["rows"] = std::move(jr);

  if (!o.table_csv.empty())
    write_file(o.table_csv, [&](std::ostream& f) {
      f << "s,p,t,v_seller,v_buyer,gross_gains,tc_total,net_gains,tc_share,p_thousand,"
           "t_thousand,gross_billion,tc_billion,net_billion,meets_price_floor\n";
      for (const auto& r : rows) {
        f << format_number(r.s) << ',' << format_number(r.p) << ',' << format_number(r.t) << ','
          << format_number(r.v_seller) << ',' << format_number(r.v_buyer) << ','
          << format_number(r.gross_gains) << ',' << format_number(r.tc_total) << ','
          << format_number(r.net_gains) << ',' << format_number(r.tc_share) << ','
          << format_number(r.p / 1e3) << ',' << format_number(r.t / 1e3) << ','
          << format_number(r.gross_gains / 1e9) << ',' << format_number(r.tc_total / 1e9) << ','
          << format_number(r.net_gains / 1e9) << ',';
        if (r.meets_price_floor) f << (*r.meets_price_floor ? "true" : "false");
        f << '\n';
      }
    });
  emit(report, o.output, out);
}

// ---------------------------------------------------------------------------
// did

struct DidOptions {
  std::string input;
  std::string treated, control;
  Window pre, post;
  std::string weighting = "units";
  std::string output;
};

void run_did(const DidOptions& o, std::ostream& out) {
  const auto records = ingest_csv(o.input);
  const auto weighting = o.weighting == "rows" ? DidWeighting::kRows : DidWeighting::kUnits;
  const auto obs =
      did_observations(records, o.treated, o.control, o.pre.filter(), o.post.filter(), weighting);
  const auto r = did_ols(obs);

  json config{{"input", o.input},     {"treated", o.treated},     {"control", o.control},
              {"pre", o.pre.to_json()}, {"post", o.post.to_json()}, {"weighting", o.weighting}};
  json report;
  report["manifest"] = make_manifest("did", config, {o.input}, std::nullopt);
  report["coefficients"] = {{"alpha0", r.alpha0},
                            {"alpha1", r.alpha1},
                            {"alpha2", r.alpha2},
                            {"alpha3", r.alpha3}};
  json se = json::array();
  for (double v : r.se) se.push_back(number_or_null(v));
  report["se"] = std::move(se);
  report["n_obs"] = r.n_obs;
  report["r2"] = r.r2;
  emit(report, o.output, out);
}

// ---------------------------------------------------------------------------
// ci

struct CiOptions {
  std::string input;
  std::string treated, control;
  Window pre, post;
  std::string estimator = "before-after";
  std::string map = "share";
  std::int64_t d = 0;
  CurveOptions curve;
  int n_draws = 200;
  std::optional<double> block_fraction;
  std::optional<std::int64_t> b;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  bool paired = false;
  unsigned threads = 0;
  std::string draws_csv;
  std::string output;
};

void run_ci(const CiOptions& o, std::ostream& out) {
  const auto records = ingest_csv(o.input);
  SampleSet samples{build_pmf(records, o.treated, o.pre.filter()),
                    build_pmf(records, o.treated, o.post.filter()), std::nullopt, std::nullopt};
  const Bandwidth d(o.d);
  Statistic stat;
  if (o.estimator == "dit") {
    if (o.control.empty()) throw ConfigError("--estimator dit needs --control");
    samples.control_pre = build_pmf(records, o.control, o.pre.filter());
    samples.control_post = build_pmf(records, o.control, o.post.filter());
    stat = dit_statistic(d);
  } else {
    stat = before_after_statistic(d);
  }
  std::vector<fs::path> inputs{o.input};
  json curve_config = nullptr;
  if (o.map != "share") {
    const auto field = o.map == "price" ? EquilibriumField::kPrice : EquilibriumField::kCost;
    stat = equilibrium_statistic(std::move(stat), o.curve.market(), o.curve.curve(), field);
    for (const auto& p : o.curve.inputs()) inputs.push_back(p);
    curve_config = o.curve.to_json();
  }

  SubsampleConfig cfg;
  cfg.n_draws = o.n_draws;
  cfg.block_fraction = o.block_fraction;
  cfg.b = o.b;
  cfg.alpha = o.alpha;
  cfg.seed = o.seed;
  cfg.paired = o.paired;
  cfg.threads = o.threads;
  const auto res = subsample_ci(samples, stat, cfg);
  if (!o.draws_csv.empty())
    write_file(o.draws_csv, [&](std::ostream& f) { write_draws_csv(f, res.draws); });

  json config{{"input", o.input},
              {"treated", o.treated},
              {"control", o.control.empty() ? json(nullptr) : json(o.control)},
              {"pre", o.pre.to_json()},
              {"post", o.post.to_json()},
              {"estimator", o.estimator},
              {"map", o.map},
              {"d", o.d},
              {"curve", curve_config},
              {"n_draws", o.n_draws},
              {"block_fraction", o.block_fraction ? json(*o.block_fraction) : json(nullptr)},
              {"b", o.b ? json(*o.b) : json(nullptr)},
              {"alpha", o.alpha},
              {"paired", o.paired}};
  json report;
  report["manifest"] = make_manifest("ci", config, inputs, o.seed);
  report["point"] = res.point;
  report["lower"] = res.lower;
  report["upper"] = res.upper;
  report["subsample_sizes"] = {{"treated_pre", res.sizes[0]},
                               {"treated_post", res.sizes[1]},
                               {"control_pre", res.sizes[2]},
                               {"control_post", res.sizes[3]}};
  report["draws"] = res.draws;
  emit(report, o.output, out);
}

// ---------------------------------------------------------------------------
// report

struct ReportOptions {
  std::string scan, dit, equilibrium, did, ci;
  std::string markdown;
  std::string output;
};

json load_block(const std::string& path, const std::string& command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  json block;
  try {
    block = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + " is not valid JSON: " + e.what());
  }
  if (!block.is_object() || !block.contains("manifest") ||
      block["manifest"].value("command", "") != command)
    throw SchemaError(path + " is not a '" + command + "' report");
  return block;
}

json summarize(const std::string& name, const json& b) {
  if (name == "scan")
    return b["selection"].contains("d")
               ? json{{"selected_d", b["selection"]["d"]}, {"s_hat", b["selection"]["real_cost"]}}
               : json{{"selection_error", b["selection"]["error"]}};
  if (name == "dit") return {{"d_star", b["d_star"]}, {"s_dit", b["s_dit"]}, {"d_floor", b["floor"]["d_floor"]}};
  if (name == "equilibrium") {
    json rows = json::array();
    for (const auto& r : b["rows"])
      rows.push_back({{"s", r["s"]},
                      {"p_thousand", r["rmb_thousand"]["p"]},
                      {"t_thousand", r["rmb_thousand"]["t"]},
                      {"net_gains_billion", r["rmb_billion"]["net_gains"]}});
    return {{"rows", rows}};
  }
  if (name == "did")
    return {{"alpha3", b["coefficients"]["alpha3"]}, {"se_alpha3", b["se"][3]}, {"n_obs", b["n_obs"]}};
  return {{"estimator", b["manifest"]["config"]["estimator"]},
          {"map", b["manifest"]["config"]["map"]},
          {"point", b["point"]},
          {"lower", b["lower"]},
          {"upper", b["upper"]},
          {"alpha", b["manifest"]["config"]["alpha"]}};
}

std::string cell(const json& v) {
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string render_markdown(const json& bundle) {
  std::ostringstream md;
  md << "# diftrans report\n\n";
  md << "tool version " << bundle["manifest"]["tool_version"].get<std::string>() << "\n";
  for (const auto& [name, s] : bundle["summary"].items()) {
    md << "\n## " << name << "\n\n";
    if (s.contains("status")) {
      md << "missing\n";
      continue;
    }
    if (name == "equilibrium") {
      md << "| s | p (RMB 1,000) | t (RMB 1,000) | net gains (RMB bn) |\n|---|---|---|---|\n";
      for (const auto& r : s["rows"])
        md << "| " << cell(r["s"]) << " | " << cell(r["p_thousand"]) << " | "
           << cell(r["t_thousand"]) << " | " << cell(r["net_gains_billion"]) << " |\n";
      continue;
    }
    md << "| field | value |\n|---|---|\n";
    for (const auto& [k, v] : s.items()) md << "| " << k << " | " << cell(v) << " |\n";
  }
  return md.str();
}

void run_report(const ReportOptions& o, std::ostream& out) {
  const std::pair<std::string, std::string> parts[] = {{"scan", o.scan},
                                                       {"dit", o.dit},
                                                       {"equilibrium", o.equilibrium},
                                                       {"did", o.did},
                                                       {"ci", o.ci}};
  json blocks, summary, config;
  std::vector<fs::path> inputs;
  for (const auto& [name, path] : parts) {
    config[name] = path.empty() ? json(nullptr) : json(path);
    if (path.empty()) {
      blocks[name] = {{"status", "missing"}};
      summary[name] = {{"status", "missing"}};
      continue;
    }
    auto block = load_block(path, name);
    summary[name] = summarize(name, block);
    blocks[name] = std::move(block);
    inputs.emplace_back(path);
  }
  json bundle;
  bundle["manifest"] = make_manifest("report", config, inputs, std::nullopt);
  bundle["summary"] = std::move(summary);
  bundle["blocks"] = std::move(blocks);
  if (!o.markdown.empty())
    write_file(o.markdown, [&](std::ostream& f) { f << render_markdown(bundle); });
  emit(bundle, o.output, out);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"diftrans: thresholded optimal transport estimates of unobserved trade, "
               "with market-equilibrium inversion",
               "diftrans"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.allow_windows_style_options(false);

  IngestOptions ingest;
  auto* c_ingest = app.add_subcommand("ingest", "validate a sales CSV and summarize it");
  c_ingest->add_option("--input", ingest.input, "sales CSV")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--city", ingest.city, "city whose PMF is summarized");
  add_window(c_ingest, ingest.window, "period", false, "PMF");
  c_ingest->add_option("--pmf-csv", ingest.pmf_csv, "write the PMF as price,count,mass");
  c_ingest->add_option("--output", ingest.output, "report path (default stdout)");

  TransportOptions transport;
  auto* c_transport = app.add_subcommand("transport", "thresholded transport cost between two windows");
  c_transport->add_option("--input", transport.input, "sales CSV")->required()->check(CLI::ExistingFile);
  c_transport->add_option("--city", transport.city, "city")->required();
  add_window(c_transport, transport.pre, "pre", true, "pre-period");
  add_window(c_transport, transport.post, "post", true, "post-period");
  c_transport->add_option("--d", transport.d, "bandwidth in price units")->required();
  c_transport->add_option("--lambda", transport.lambda,
                          "distance penalty of the regularized plan; 0 for the plain plan")
      ->default_val(0.0);
  c_transport->add_option("--plan-csv", transport.plan_csv, "write the plan as i,j,x_i,x_j,mass");
  c_transport->add_option("--output", transport.output, "report path (default stdout)");

  ScanOptions scan;
  auto* c_scan = app.add_subcommand("scan", "real and placebo costs over a bandwidth grid");
  c_scan->add_option("--input", scan.input, "sales CSV")->required()->check(CLI::ExistingFile);
  c_scan->add_option("--city", scan.city, "city")->required();
  add_window(c_scan, scan.pre, "pre", true, "pre-period");
  add_window(c_scan, scan.post, "post", true, "post-period");
  c_scan->add_option("--d-grid", scan.grid, "bandwidth grid lo:hi:step or a comma list")->required();
  add_placebo(c_scan, scan.placebo, "defaults to --city over --pre");
  c_scan->add_option("--scan-csv", scan.scan_csv, "write the scan table");
  c_scan->add_option("--output", scan.output, "report path (default stdout)");

  DitOptions dit;
  auto* c_dit = app.add_subcommand("dit", "difference in transports and its bandwidth choice");
  c_dit->add_option("--input", dit.input, "sales CSV")->required()->check(CLI::ExistingFile);
  c_dit->add_option("--treated", dit.treated, "treated city")->required();
  c_dit->add_option("--control", dit.control, "control city")->required();
  add_window(c_dit, dit.pre, "pre", true, "pre-period");
  add_window(c_dit, dit.post, "post", true, "post-period");
  c_dit->add_option("--d-grid", dit.grid, "bandwidth grid lo:hi:step or a comma list")->required();
  add_placebo(c_dit, dit.placebo, "defaults to --treated over --pre");
  c_dit->add_option("--d-min", dit.d_min,
                    "lower bandwidth bound: 'auto' (placebo and equal-displacement rules) or "
                    "an integer")
      ->default_val("auto");
  c_dit->add_option("--tolerance", dit.tolerance, "equal-displacement tolerance")
      ->default_val(kDefaultDisplacementTolerance);
  add_window(c_dit, dit.diagnostic_pre, "diagnostic-pre", false,
             "earlier window of the equal-displacement check");
  add_window(c_dit, dit.diagnostic_post, "diagnostic-post", false,
             "later window of the equal-displacement check");
  c_dit->add_option("--curve-csv", dit.curve_csv, "write the scan with the dit column");
  c_dit->add_option("--displacement-csv", dit.displacement_csv,
                    "write the equal-displacement curves");
  c_dit->add_option("--output", dit.output, "report path (default stdout)");

  EquilibriumOptions eq;
  auto* c_eq = app.add_subcommand("equilibrium", "invert trade shares into prices, costs and gains");
  add_curve(c_eq, eq.curve);
  c_eq->add_option("--s", eq.s, "trade shares, comma separated; 'max' for the frictionless share")
      ->required();
  c_eq->add_option("--price-floor", eq.price_floor, "flag rows whose price is at least this");
  c_eq->add_option("--table-csv", eq.table_csv, "write the solutions as CSV");
  c_eq->add_option("--output", eq.output, "report path (default stdout)");

  DidOptions did;
  auto* c_did = app.add_subcommand("did", "difference-in-differences regression of log prices");
  c_did->add_option("--input", did.input, "sales CSV")->required()->check(CLI::ExistingFile);
  c_did->add_option("--treated", did.treated, "treated city")->required();
  c_did->add_option("--control", did.control, "control city")->required();
  add_window(c_did, did.pre, "pre", true, "pre-period");
  add_window(c_did, did.post, "post", true, "post-period");
  c_did->add_option("--weighting", did.weighting, "units or rows")
      ->default_val("units")
      ->check(CLI::IsMember({"units", "rows"}));
  c_did->add_option("--output", did.output, "report path (default stdout)");

  CiOptions ci;
  auto* c_ci = app.add_subcommand("ci", "subsampling confidence interval");
  c_ci->add_option("--input", ci.input, "sales CSV")->required()->check(CLI::ExistingFile);
  c_ci->add_option("--treated", ci.treated, "treated city")->required();
  c_ci->add_option("--control", ci.control, "control city (dit estimator)");
  add_window(c_ci, ci.pre, "pre", true, "pre-period");
  add_window(c_ci, ci.post, "post", true, "post-period");
  c_ci->add_option("--estimator", ci.estimator, "before-after or dit")
      ->default_val("before-after")
      ->check(CLI::IsMember({"before-after", "dit"}));
  c_ci->add_option("--map", ci.map, "share, or price / cost through the volume inversion")
      ->default_val("share")
      ->check(CLI::IsMember({"share", "price", "cost"}));
  c_ci->add_option("--d", ci.d, "bandwidth")->required();
  add_curve(c_ci, ci.curve);
  c_ci->add_option("--n-draws", ci.n_draws, "subsample draws")->default_val(200);
  auto* bf = c_ci->add_option("--block-fraction", ci.block_fraction,
                              "subsample size as a fraction of each side");
  auto* bo = c_ci->add_option("--b", ci.b, "subsample size used on every side");
  bf->excludes(bo);
  c_ci->add_option("--alpha", ci.alpha, "one minus the coverage level")->default_val(0.05);
  c_ci->add_option("--seed", ci.seed, "random seed")->default_val(0);
  c_ci->add_flag("--paired", ci.paired, "share random streams between treated and control");
  add_threads(c_ci, ci.threads);
  c_ci->add_option("--draws-csv", ci.draws_csv, "write draws as draw_index,value");
  c_ci->add_option("--output", ci.output, "report path (default stdout)");

  ReportOptions rep;
  auto* c_rep = app.add_subcommand("report", "combine command reports into one bundle");
  c_rep->add_option("--scan", rep.scan, "scan report");
  c_rep->add_option("--dit", rep.dit, "dit report");
  c_rep->add_option("--equilibrium", rep.equilibrium, "equilibrium report");
  c_rep->add_option("--did", rep.did, "did report");
  c_rep->add_option("--ci", rep.ci, "ci report");
  c_rep->add_option("--markdown", rep.markdown, "also write a Markdown summary");
  c_rep->add_option("--output", rep.output, "bundle path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (c_ingest->parsed()) run_ingest(ingest, out);
    else if (c_transport->parsed()) run_transport(transport, out);
    else if (c_scan->parsed()) return run_scan(scan, out, err);
    else if (c_dit->parsed()) run_dit(dit, out);
    else if (c_eq->parsed()) run_equilibrium(eq, out);
    else if (c_did->parsed()) run_did(did, out);
    else if (c_ci->parsed()) run_ci(ci, out);
    else if (c_rep->parsed()) run_report(rep, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace diftrans::cli
