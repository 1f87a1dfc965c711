#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "diftrans/error.hpp"
#include "diftrans/estimators.hpp"
#include "diftrans/stats.hpp"
#include "instances.hpp"

using namespace diftrans;
using diftrans::testing::random_count_pmf;
using diftrans::testing::random_pmf;
using diftrans::testing::random_pool;

namespace {

std::vector<Bandwidth> grid_of(std::initializer_list<std::int64_t> ds) {
  std::vector<Bandwidth> g;
  for (auto d : ds) g.emplace_back(d);
  return g;
}

PlaceboConfig small_config(int sims, std::uint64_t seed = 7) {
  PlaceboConfig c;
  c.n_sims = sims;
  c.seed = seed;
  return c;
}

BandwidthScan scan_from(std::vector<std::pair<std::int64_t, double>> rows) {
  BandwidthScan s;
  for (auto [d, v] : rows) {
    ScanRow r;
    r.d = Bandwidth(d);
    r.dit_value = v;
    s.rows.push_back(r);
  }
  return s;
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("before-after delegates to the transport cost") {
    const auto a = PricePMF::from_masses({1, 2}, {0.75, 0.25}, 8);
    const auto b = PricePMF::from_masses({1, 2}, {0.25, 0.75}, 8);
    CHECK(before_after(a, b, Bandwidth(0)) == 0.5);
    CHECK(before_after(a, a, Bandwidth(0)) == 0.0);
    std::mt19937_64 rng(1);
    const auto pool = random_pool(rng, 50, 0, 10000);
    for (int k = 0; k < 50; ++k) {
      const auto x = random_pmf(rng, pool, 10);
      const auto y = random_pmf(rng, pool, 14);
      CHECK(before_after(x, y, Bandwidth(300)) == ot_cost(x, y, Bandwidth(300)));
    }
  }

  TEST_CASE("placebo of a point mass is zero") {
    const auto base = PricePMF::point_mass(50000, 10);
    const auto s = placebo_cost(base, 100, 80, Bandwidth(0), small_config(50));
    CHECK(s.mean == 0.0);
    CHECK(s.sd == 0.0);
    for (double q : s.quantiles) CHECK(q == 0.0);
  }

  TEST_CASE("placebo vanishes beyond the support span") {
    const auto base = PricePMF::from_masses({0, 500, 900}, {0.2, 0.3, 0.5}, 10);
    CHECK(placebo_cost(base, 30, 30, Bandwidth(900), small_config(100)).mean == 0.0);
  }

  TEST_CASE("placebo matches a direct binomial Monte Carlo") {
    const auto base = PricePMF::from_masses({0, 1000000}, {0.5, 0.5}, 2);
    const auto s = placebo_cost(base, 100, 100, Bandwidth(0), small_config(2000, 99));
    std::mt19937_64 rng(2024);
    std::binomial_distribution<int> bin(100, 0.5);
    std::vector<double> oracle(20000);
    for (auto& v : oracle) v = std::abs(bin(rng) - bin(rng)) / 100.0;
    const double m = mean(oracle);
    const double se = std::sqrt(s.sd * s.sd / 2000.0 + stddev(oracle) * stddev(oracle) / 20000.0);
    CHECK(std::abs(s.mean - m) <= 3.0 * se);
    CHECK(std::abs(m - 0.0563) <= 0.002);
  }

  TEST_CASE("placebo is reproducible, thread independent and nonincreasing in d") {
    std::mt19937_64 rng(2);
    const auto pool = random_pool(rng, 40, 0, 20000);
    const auto base = random_count_pmf(rng, pool, 30, 5000);
    const auto grid = grid_of({0, 100, 500, 1000, 3000, 8000});
    auto cfg = small_config(120, 5);
    cfg.threads = 1;
    const auto one = placebo_costs(base, 400, 300, grid, cfg);
    cfg.threads = 6;
    const auto many = placebo_costs(base, 400, 300, grid, cfg);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(one[k].mean == many[k].mean);
      CHECK(one[k].sd == many[k].sd);
      CHECK(one[k].quantiles == many[k].quantiles);
      if (k > 0) {
        CHECK(one[k].mean <= one[k - 1].mean);
        for (std::size_t j = 0; j < one[k].quantiles.size(); ++j)
          CHECK(one[k].quantiles[j] <= one[k - 1].quantiles[j]);
      }
    }
    cfg.seed = 6;
    CHECK(placebo_costs(base, 400, 300, grid, cfg)[0].mean != one[0].mean);
  }

  TEST_CASE("config validation") {
    PlaceboConfig c;
    c.n_sims = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.n_sims = 5;
    c.quantiles = {0.5, 1.0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("bandwidth selection") {
    const auto point = PricePMF::point_mass(100, 5);
    const auto grid = grid_of({0, 10, 20});
    CHECK(select_bandwidth(point, 50, 50, grid, small_config(20)) == Bandwidth(0));

    const auto base = PricePMF::from_masses({0, 1000}, {0.5, 0.5}, 2);
    CHECK(select_bandwidth(base, 50, 50, grid_of({1001}), small_config(20)) == Bandwidth(1001));

    const auto wide = grid_of({0, 999});
    try {
      select_bandwidth(base, 50, 50, wide, small_config(20));
      FAIL("expected a selection failure");
    } catch (const SelectionError& e) {
      CHECK(std::string(e.what()).find("smallest placebo mean") != std::string::npos);
    }

    // Tightening the threshold never selects a smaller d.
    std::mt19937_64 rng(4);
    const auto pool = random_pool(rng, 25, 0, 3000);
    for (int k = 0; k < 10; ++k) {
      const auto heavy = random_count_pmf(rng, pool, 12, 200);
      const auto g = grid_of({0, 50, 100, 200, 400, 800, 1600, 3200});
      const auto cfg = small_config(60, k);
      const auto loose = select_bandwidth(heavy, 40, 40, g, cfg, 0.005);
      const auto tight = select_bandwidth(heavy, 40, 40, g, cfg, 0.0005);
      CHECK(loose <= tight);
    }
  }

  TEST_CASE("quantile selection rule") {
    std::vector<PlaceboSummary> summaries(2);
    summaries[0] = {0.001, 0.0, {0.0, 0.0, 0.0, 0.0, 0.01}};
    summaries[1] = {0.0, 0.0, {0.0, 0.0, 0.0, 0.0, 0.0}};
    const std::vector<double> levels{0.025, 0.25, 0.5, 0.75, 0.975};
    const auto g = grid_of({0, 10});
    CHECK(select_bandwidth(g, summaries, levels, 0.0005) == Bandwidth(10));
    CHECK(select_bandwidth(g, summaries, levels, 0.0005, {0.5}) == Bandwidth(0));
    CHECK(select_bandwidth(g, summaries, levels, 0.0005, {0.975}) == Bandwidth(10));
    CHECK_THROWS_AS(select_bandwidth(g, summaries, levels, 0.0005, {0.9}), ConfigError);
  }

  TEST_CASE("difference in transports") {
    const auto a = PricePMF::from_masses({1, 2}, {0.75, 0.25}, 8);
    const auto b = PricePMF::from_masses({1, 2}, {0.25, 0.75}, 8);
    const auto c = PricePMF::from_masses({5}, {1.0}, 8);
    CHECK(diff_in_transports(a, b, c, c, Bandwidth(0)) == 0.5);

    std::mt19937_64 rng(5);
    const auto pool = random_pool(rng, 40, 0, 3000);
    for (int k = 0; k < 200; ++k) {
      const auto x = random_pmf(rng, pool, 1 + k % 15);
      const auto y = random_pmf(rng, pool, 1 + k % 11);
      const auto z = random_pmf(rng, pool, 1 + k % 9);
      for (std::int64_t d : {0, 10, 200}) {
        CHECK(diff_in_transports(x, y, x, y, Bandwidth(d)) <= 1e-12);
        // With the control pre-distribution equal to the treated one, the
        // estimate never exceeds the transport between the post-distributions.
        CHECK(diff_in_transports(x, y, x, z, Bandwidth(d)) <=
              ot_cost(z, y, Bandwidth(d)) + 1e-12);
      }
    }
  }

  TEST_CASE("select_dstar") {
    const auto scan = scan_from({{7000, 0.1187}, {10000, 0.1015}, {15000, 0.0683}});
    const auto [d, v] = select_dstar(scan, Bandwidth(7000));
    CHECK(d == Bandwidth(7000));
    CHECK(v == 0.1187);
    CHECK(select_dstar(scan_from({{5, 0.2}}), Bandwidth(0)).first == Bandwidth(5));
    CHECK(select_dstar(scan_from({{1, 0.2}, {2, 0.2}, {3, 0.2}}), Bandwidth(2)).first ==
          Bandwidth(2));
    CHECK(select_dstar(scan_from({{0, 0.9}, {7000, 0.1187}, {10000, 0.1015}}), Bandwidth(7000))
              .first == Bandwidth(7000));
    CHECK_THROWS_AS(select_dstar(scan, Bandwidth(20000)), SelectionError);
  }

  TEST_CASE("d_floor") {
    CHECK(d_floor(Bandwidth(7000), Bandwidth(2000)) == Bandwidth(7000));
    CHECK(d_floor(Bandwidth(0), Bandwidth(0)) == Bandwidth(0));
    CHECK(d_floor(Bandwidth(3000), Bandwidth(9000)) == Bandwidth(9000));
  }

  TEST_CASE("equal displacement curves and floor") {
    std::mt19937_64 rng(6);
    const auto pool = random_pool(rng, 30, 0, 5000);
    const auto grid = grid_of({0, 100, 500, 1000, 2000, 5000});
    for (int k = 0; k < 30; ++k) {
      const auto a = random_pmf(rng, pool, 10);
      const auto b = random_pmf(rng, pool, 10);
      const auto same = equal_displacement_curves(a, b, a, b, grid);
      for (const auto& r : same) CHECK(r.difference == 0.0);
      const auto flat = equal_displacement_curves(a, b, a, a, grid);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(flat[i].difference == flat[i].cost_a);
        if (i > 0) CHECK(flat[i].cost_a <= flat[i - 1].cost_a + 1e-12);
      }
    }
    std::vector<DisplacementRow> rows{{Bandwidth(0), 0.3, 0.1, 0.2},
                                      {Bandwidth(1000), 0.1, 0.098, 0.002},
                                      {Bandwidth(2000), 0.2, 0.19, 0.01},
                                      {Bandwidth(3000), 0.05, 0.049, 0.001},
                                      {Bandwidth(4000), 0.0, 0.0, 0.0}};
    CHECK(equal_displacement_floor(rows) == Bandwidth(3000));
    CHECK(equal_displacement_floor(rows, 0.5) == Bandwidth(0));
    rows.back().difference = 0.2;
    CHECK_THROWS_AS(equal_displacement_floor(rows), SelectionError);
    std::ostringstream out;
    write_displacement_csv(out, rows);
    CHECK(out.str().rfind("d,cost_a,cost_b,difference\n0,0.3,0.1,0.2\n", 0) == 0);
  }

  TEST_CASE("scan table") {
    const auto pre = PricePMF::from_counts({1000, 2000, 3000}, {5, 3, 2});
    const auto post = PricePMF::from_counts({1000, 2000, 3000}, {2, 3, 5});
    const auto grid = grid_of({0, 1000, 2000});
    const auto scan = bandwidth_scan(pre, post, grid, pre, small_config(30));
    REQUIRE(scan.rows.size() == 3);
    CHECK(scan.rows[0].real_cost >= scan.rows[1].real_cost);
    CHECK(scan.rows[1].real_cost >= scan.rows[2].real_cost);
    CHECK_FALSE(scan.rows[0].dit_value);
    std::ostringstream out;
    scan.write_csv(out);
    const std::string text = out.str();
    CHECK(text.rfind("d,real_cost,placebo_mean,placebo_sd,q025,q25,q50,q75,q975,dit\n", 0) == 0);
    CHECK(text.find("\n2000,0,0,0,0,0,0,0,0,\n") != std::string::npos);

    const auto with = bandwidth_scan(pre, post, grid, pre, small_config(30), ControlPair{pre, pre});
    CHECK(with.rows[0].dit_value.value() == scan.rows[0].real_cost);
  }

  TEST_CASE("grid parsing") {
    const auto g = parse_grid("0:10000:2500");
    CHECK(g == grid_of({0, 2500, 5000, 7500, 10000}));
    CHECK(parse_grid("500, 0,500,100") == grid_of({0, 100, 500}));
    CHECK_THROWS_AS(parse_grid("0:10:0"), ParseError);
    CHECK_THROWS_AS(parse_grid("a,b"), ParseError);
    CHECK_THROWS_AS(parse_grid(""), ParseError);
  }
}
