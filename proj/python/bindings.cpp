#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "diftrans/baseline.hpp"
#include "diftrans/equilibrium.hpp"
#include "diftrans/error.hpp"
#include "diftrans/estimators.hpp"
#include "diftrans/inference.hpp"
#include "diftrans/pmf.hpp"
#include "diftrans/transport.hpp"

namespace py = pybind11;
using namespace diftrans;

namespace {

std::vector<Bandwidth> to_grid(const std::vector<std::int64_t>& ds) {
  return {ds.begin(), ds.end()};
}

py::dict summary_dict(const PlaceboSummary& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["sd"] = s.sd;
  d["quantiles"] = s.quantiles;
  return d;
}

PlaceboConfig placebo_config(int n_sims, std::uint64_t seed,
                             const std::vector<double>& quantiles, unsigned threads) {
  PlaceboConfig c;
  c.n_sims = n_sims;
  c.seed = seed;
  c.quantiles = quantiles;
  c.threads = threads;
  return c;
}

py::dict solution_dict(const MarketSolution& s) {
  py::dict d;
  d["s"] = s.s;
  d["p"] = s.p;
  d["t"] = s.t;
  d["v_seller"] = s.v_seller;
  d["v_buyer"] = s.v_buyer;
  d["gross_gains"] = s.gross_gains;
  d["tc_total"] = s.tc_total;
  d["net_gains"] = s.net_gains;
  d["tc_share"] = s.tc_share;
  d["meets_price_floor"] = s.meets_price_floor ? py::cast(*s.meets_price_floor) : py::none();
  return d;
}

const std::vector<double> kQuantiles{0.025, 0.25, 0.5, 0.75, 0.975};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Thresholded optimal transport estimators of unobserved trade";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<EmptyDistributionError>(m, "EmptyDistributionError", base.ptr());
  py::register_exception<SizeError>(m, "SizeError", base.ptr());
  py::register_exception<SelectionError>(m, "SelectionError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<IdentificationError>(m, "IdentificationError", base.ptr());
  py::register_exception<SingularDesignError>(m, "SingularDesignError", base.ptr());

  // pmf
  py::class_<SalesRecord>(m, "SalesRecord")
      .def(py::init([](std::string city, int year, int month, std::int64_t price,
                       std::int64_t quantity) {
             return SalesRecord{std::move(city), year, month, price, quantity};
           }),
           py::arg("city"), py::arg("year"), py::arg("month"), py::arg("price"),
           py::arg("quantity"))
      .def_readwrite("city", &SalesRecord::city)
      .def_readwrite("year", &SalesRecord::year)
      .def_readwrite("month", &SalesRecord::month)
      .def_readwrite("price", &SalesRecord::price)
      .def_readwrite("quantity", &SalesRecord::quantity);

  py::class_<PeriodFilter>(m, "PeriodFilter")
      .def(py::init<>())
      .def_static("parse", &PeriodFilter::parse, py::arg("ranges"), py::arg("excludes") = "")
      .def("describe", &PeriodFilter::describe);

  py::class_<PricePMF>(m, "PricePMF")
      .def_static("from_counts", &PricePMF::from_counts, py::arg("support"), py::arg("counts"))
      .def_static("from_masses", &PricePMF::from_masses, py::arg("support"), py::arg("mass"),
                  py::arg("n"))
      .def_static("point_mass", &PricePMF::point_mass, py::arg("price"), py::arg("n") = 1)
      .def_property_readonly("support", [](const PricePMF& p) {
        return std::vector<std::int64_t>(p.support().begin(), p.support().end());
      })
      .def_property_readonly("mass", [](const PricePMF& p) {
        return std::vector<double>(p.mass().begin(), p.mass().end());
      })
      .def_property_readonly("counts", [](const PricePMF& p) {
        return std::vector<std::int64_t>(p.counts().begin(), p.counts().end());
      })
      .def_property_readonly("n", &PricePMF::n)
      .def("mass_at", &PricePMF::mass_at)
      .def("__len__", &PricePMF::size)
      .def("__eq__", [](const PricePMF& a, const PricePMF& b) { return a == b; });

  py::class_<CsvSchema>(m, "CsvSchema")
      .def(py::init<>())
      .def_readwrite("city", &CsvSchema::city)
      .def_readwrite("year", &CsvSchema::year)
      .def_readwrite("month", &CsvSchema::month)
      .def_readwrite("price", &CsvSchema::price)
      .def_readwrite("quantity", &CsvSchema::quantity);
  m.def("ingest_csv", py::overload_cast<const std::filesystem::path&, const CsvSchema&>(&ingest_csv),
        py::arg("path"), py::arg("schema") = CsvSchema{});
  m.def("build_pmf",
        [](const std::vector<SalesRecord>& records, const std::string& city,
           const PeriodFilter& filter) { return build_pmf(records, city, filter); },
        py::arg("records"), py::arg("city"),
        py::arg("filter") = PeriodFilter{});

  // transport
  m.def("ot_cost",
        [](const PricePMF& a, const PricePMF& b, std::int64_t d) {
          return ot_cost(a, b, Bandwidth(d));
        },
        py::arg("a"), py::arg("b"), py::arg("d"));
  m.def("solve_ot",
        [](const PricePMF& a, const PricePMF& b, std::int64_t d, double lambda) {
          const auto plan = lambda > 0.0 ? solve_ot_regularized(a, b, Bandwidth(d), lambda)
                                         : solve_ot(a, b, Bandwidth(d));
          py::list entries;
          for (const auto& e : plan.entries)
            entries.append(py::make_tuple(plan.source_support[e.source],
                                          plan.target_support[e.target], e.mass));
          py::dict out;
          out["cost"] = plan.cost;
          out["entries"] = entries;
          out["displacement"] = plan.displacement();
          out["regularization"] = plan.regularization;
          return out;
        },
        py::arg("a"), py::arg("b"), py::arg("d"), py::arg("lambda_") = 0.0);
  m.def("strassen_certificate",
        [](const PricePMF& a, const PricePMF& b, std::int64_t d) {
          const auto c = strassen_certificate(a, b, Bandwidth(d));
          return py::make_tuple(c.value, c.source_set);
        },
        py::arg("a"), py::arg("b"), py::arg("d"));

  // estimators
  m.def("diff_in_transports",
        [](const PricePMF& tp, const PricePMF& tq, const PricePMF& cp, const PricePMF& cq,
           std::int64_t d) { return diff_in_transports(tp, tq, cp, cq, Bandwidth(d)); },
        py::arg("treated_pre"), py::arg("treated_post"), py::arg("control_pre"),
        py::arg("control_post"), py::arg("d"));
  m.def("placebo_costs",
        [](const PricePMF& base, std::int64_t n_pre, std::int64_t n_post,
           const std::vector<std::int64_t>& grid, int n_sims, std::uint64_t seed,
           const std::vector<double>& quantiles, unsigned threads) {
          py::list out;
          for (const auto& s : placebo_costs(base, n_pre, n_post, to_grid(grid),
                                             placebo_config(n_sims, seed, quantiles, threads)))
            out.append(summary_dict(s));
          return out;
        },
        py::arg("base"), py::arg("n_pre"), py::arg("n_post"), py::arg("grid"),
        py::arg("n_sims") = 500, py::arg("seed") = 0, py::arg("quantiles") = kQuantiles,
        py::arg("threads") = 0);
  m.def("select_bandwidth",
        [](const PricePMF& base, std::int64_t n_pre, std::int64_t n_post,
           const std::vector<std::int64_t>& grid, int n_sims, std::uint64_t seed,
           double threshold, unsigned threads) {
          return select_bandwidth(base, n_pre, n_post, to_grid(grid),
                                  placebo_config(n_sims, seed, kQuantiles, threads), threshold)
              .value();
        },
        py::arg("base"), py::arg("n_pre"), py::arg("n_post"), py::arg("grid"),
        py::arg("n_sims") = 500, py::arg("seed") = 0,
        py::arg("threshold") = kDefaultPlaceboThreshold, py::arg("threads") = 0);

  // equilibrium
  py::class_<WtpCurve>(m, "WtpCurve")
      .def_static("from_knots",
                  [](const std::vector<std::pair<double, double>>& knots, bool perturb_ties) {
                    std::vector<WtpCurve::Knot> k;
                    for (const auto& [n, v] : knots) k.push_back({n, v});
                    return WtpCurve::from_knots(std::move(k),
                                                perturb_ties ? WtpCurve::Strictify::kPerturb
                                                             : WtpCurve::Strictify::kReject);
                  },
                  py::arg("knots"), py::arg("perturb_ties") = false)
      .def_static("load_csv",
                  [](const std::filesystem::path& path, bool perturb_ties) {
                    return WtpCurve::load_csv(path, perturb_ties ? WtpCurve::Strictify::kPerturb
                                                                 : WtpCurve::Strictify::kReject);
                  },
                  py::arg("path"), py::arg("perturb_ties") = false)
      .def_static("uniform", &WtpCurve::uniform, py::arg("v_max"))
      .def("cdf", &WtpCurve::cdf)
      .def("quantile", &WtpCurve::quantile)
      .def("density", &WtpCurve::density)
      .def_property_readonly("v_max", &WtpCurve::v_max)
      .def_property_readonly("n_max", &WtpCurve::n_max);

  py::class_<MarketConfig>(m, "MarketConfig")
      .def(py::init([](std::int64_t N, std::int64_t q, double z) {
             MarketConfig c{N, q, z};
             c.validate();
             return c;
           }),
           py::arg("N") = 700000, py::arg("q") = 260000, py::arg("z") = 0.0)
      .def_readonly("N", &MarketConfig::N)
      .def_readonly("q", &MarketConfig::q)
      .def_readonly("z", &MarketConfig::z);

  m.def("max_trade_share", &max_trade_share, py::arg("cfg"));
  m.def("solve_no_tc",
        [](const MarketConfig& cfg, const WtpCurve& F) {
          const auto e = solve_no_tc(cfg, F);
          return py::make_tuple(e.p_notc, e.s_notc);
        },
        py::arg("cfg"), py::arg("F"));
  m.def("invert_from_volume",
        [](const MarketConfig& cfg, const WtpCurve& F, double s) {
          return solution_dict(invert_from_volume(cfg, F, s));
        },
        py::arg("cfg"), py::arg("F"), py::arg("s"));
  m.def("bounds_table",
        [](const MarketConfig& cfg, const WtpCurve& F, const std::vector<double>& s,
           std::optional<double> price_floor) {
          py::list out;
          for (const auto& r : bounds_table(cfg, F, s, price_floor)) out.append(solution_dict(r));
          return out;
        },
        py::arg("cfg"), py::arg("F"), py::arg("s"), py::arg("price_floor") = py::none());
  m.def("comparative_statics",
        [](const MarketConfig& cfg, const WtpCurve& F, double s) {
          const auto c = comparative_statics(cfg, F, s);
          return py::make_tuple(c.dp_ds, c.dt_ds);
        },
        py::arg("cfg"), py::arg("F"), py::arg("s"));

  // inference
  m.def("subsample_ci",
        [](const PricePMF& pre, const PricePMF& post, std::int64_t d,
           std::optional<PricePMF> control_pre, std::optional<PricePMF> control_post,
           int n_draws, std::optional<std::int64_t> b, double alpha, std::uint64_t seed,
           bool paired, unsigned threads) {
          SampleSet s{pre, post, std::move(control_pre), std::move(control_post)};
          const auto stat =
              s.control_pre ? dit_statistic(Bandwidth(d)) : before_after_statistic(Bandwidth(d));
          SubsampleConfig cfg;
          cfg.n_draws = n_draws;
          cfg.b = b;
          cfg.alpha = alpha;
          cfg.seed = seed;
          cfg.paired = paired;
          cfg.threads = threads;
          const auto r = subsample_ci(s, stat, cfg);
          py::dict out;
          out["point"] = r.point;
          out["lower"] = r.lower;
          out["upper"] = r.upper;
          out["draws"] = r.draws;
          return out;
        },
        py::arg("pre"), py::arg("post"), py::arg("d"), py::arg("control_pre") = py::none(),
        py::arg("control_post") = py::none(), py::arg("n_draws") = 200,
        py::arg("b") = py::none(), py::arg("alpha") = 0.05, py::arg("seed") = 0,
        py::arg("paired") = false, py::arg("threads") = 0);

  // baseline
  m.def("did_ols",
        [](const std::vector<std::tuple<bool, bool, double, double>>& rows) {
          std::vector<DidObservation> obs;
          for (const auto& [treated, post, price, weight] : rows)
            obs.push_back({treated, post, price, weight});
          const auto r = did_ols(obs);
          py::dict out;
          out["alpha"] = std::vector<double>{r.alpha0, r.alpha1, r.alpha2, r.alpha3};
          out["se"] = std::vector<double>(r.se.begin(), r.se.end());
          out["n_obs"] = r.n_obs;
          out["r2"] = r.r2;
          return out;
        },
        py::arg("observations"));
}
