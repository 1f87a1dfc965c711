#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "diftrans/error.hpp"
#include "diftrans/pmf.hpp"

using namespace diftrans;

namespace {

std::vector<SalesRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return ingest_csv(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("pmf") {
  TEST_CASE("ingest keeps every row") {
    const auto recs = parse(
        "city,year,month,price,quantity\n"
        "Beijing,2010,1,100000,5\n"
        "Beijing,2010,2,120000,0\n"
        "Tianjin,2011,12,90000,3\n");
    REQUIRE(recs.size() == 3);
    CHECK(recs[1].quantity == 0);
    CHECK(recs[2].city == "Tianjin");
    CHECK(recs[2].period() == YearMonth{2011, 12});
  }

  TEST_CASE("header only gives no records") {
    CHECK(parse("city,year,month,price,quantity\n").empty());
  }

  TEST_CASE("month out of range names the row") {
    CHECK(error_of("city,year,month,price,quantity\nBeijing,2010,13,100000,5\n") ==
          "month out of range, row 2");
  }

  TEST_CASE("schema and parse errors") {
    CHECK_THROWS_AS(parse("city,year,month,price\nA,2010,1,5\n"), SchemaError);
    CHECK(error_of("city,year,month,price\nA,2010,1,5\n").find("quantity") != std::string::npos);
    CHECK_THROWS_AS(parse("city,year,month,price,quantity\nA,2010,1,abc,5\n"), ParseError);
    CHECK(error_of("city,year,month,price,quantity\nA,2010,1,5,1\nA,2010,1,5,1.5\n")
              .find("row 3") != std::string::npos);
    CHECK_THROWS_AS(parse("city,year,month,price,quantity\nA,2010,1,-5,1\n"), ValidationError);
    CHECK_THROWS_AS(parse("city,year,month,price,quantity\nA,2010,1,5,-1\n"), ValidationError);
  }

  TEST_CASE("custom schema columns in any order") {
    std::istringstream in("qty,p,m,y,region\n4,100,3,2012,X\n");
    CsvSchema schema{"region", "y", "m", "p", "qty"};
    const auto recs = ingest_csv(in, schema);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].price == 100);
    CHECK(recs[0].quantity == 4);
    CHECK(recs[0].month == 3);
  }

  TEST_CASE("build_pmf from the two-point example") {
    const std::vector<SalesRecord> recs{{"A", 2010, 1, 1, 6}, {"A", 2010, 1, 2, 2}};
    const auto pmf = build_pmf(recs, "A");
    CHECK(std::vector<std::int64_t>(pmf.support().begin(), pmf.support().end()) ==
          std::vector<std::int64_t>{1, 2});
    CHECK(pmf.mass()[0] == 0.75);
    CHECK(pmf.mass()[1] == 0.25);
    CHECK(pmf.n() == 8);
  }

  TEST_CASE("single record is a point mass") {
    const std::vector<SalesRecord> recs{{"A", 2010, 1, 50000, 10}};
    const auto pmf = build_pmf(recs, "A");
    CHECK(pmf == PricePMF::from_counts({50000}, {10}));
    CHECK(pmf.mass()[0] == 1.0);
  }

  TEST_CASE("duplicate prices merge") {
    const std::vector<SalesRecord> recs{{"A", 2010, 1, 5, 3}, {"A", 2010, 2, 5, 7}};
    const auto pmf = build_pmf(recs, "A");
    CHECK(pmf.size() == 1);
    CHECK(pmf.n() == 10);
    CHECK(pmf.mass()[0] == 1.0);
  }

  TEST_CASE("no matching units") {
    const std::vector<SalesRecord> recs{{"A", 2010, 1, 5, 0}, {"B", 2010, 1, 5, 3}};
    CHECK_THROWS_AS(build_pmf(recs, "A"), EmptyDistributionError);
    CHECK_THROWS_AS(build_pmf(recs, "B", PeriodFilter::parse("2011-01")), EmptyDistributionError);
  }

  TEST_CASE("row order does not matter and invariants hold") {
    std::mt19937_64 rng(3);
    std::vector<SalesRecord> recs;
    std::uniform_int_distribution<int> price(0, 40), qty(0, 9), month(1, 12);
    for (int i = 0; i < 300; ++i)
      recs.push_back({"A", 2010, month(rng), 1000 * price(rng), qty(rng)});
    const auto ref = build_pmf(recs, "A");
    double total = 0.0;
    for (double m : ref.mass()) total += m;
    CHECK(std::abs(total - 1.0) <= 1e-12);
    CHECK(std::is_sorted(ref.support().begin(), ref.support().end()));
    CHECK(std::adjacent_find(ref.support().begin(), ref.support().end()) == ref.support().end());
    for (int k = 0; k < 5; ++k) {
      std::shuffle(recs.begin(), recs.end(), rng);
      CHECK(build_pmf(recs, "A") == ref);
    }
    CHECK(build_pmf(recs, "A", PeriodFilter::parse("2010-01:2010-12")) == ref);
  }

  TEST_CASE("period filter ranges and exclusions") {
    const auto f = PeriodFilter::parse("2010-01:2010-12,2012-03", "2010-12");
    CHECK(f.contains({2010, 1}));
    CHECK(f.contains({2010, 11}));
    CHECK_FALSE(f.contains({2010, 12}));
    CHECK_FALSE(f.contains({2011, 6}));
    CHECK(f.contains({2012, 3}));
    CHECK(PeriodFilter{}.contains({1999, 7}));
    CHECK(PeriodFilter::parse("", "2010-05").contains({2010, 4}));
    CHECK_FALSE(PeriodFilter::parse("", "2010-05").contains({2010, 5}));
    CHECK_THROWS_AS(PeriodFilter::parse("2010-13"), ValidationError);
    CHECK_THROWS_AS(PeriodFilter::parse("2010-05:2010-01"), ValidationError);
    CHECK_THROWS_AS(PeriodFilter::parse("May 2010"), ParseError);
  }

  TEST_CASE("PricePMF validation") {
    CHECK_THROWS_AS(PricePMF::from_masses({1, 1}, {0.5, 0.5}, 2), ValidationError);
    CHECK_THROWS_AS(PricePMF::from_masses({1, 2}, {0.5, 0.6}, 2), ValidationError);
    CHECK_THROWS_AS(PricePMF::from_masses({1, 2}, {-0.5, 1.5}, 2), ValidationError);
    CHECK_THROWS_AS(PricePMF::from_masses({-1}, {1.0}, 2), ValidationError);
    CHECK_THROWS_AS(PricePMF::from_masses({1}, {1.0}, 0), ValidationError);
    CHECK_THROWS_AS(PricePMF::from_counts({1, 2}, {0, 0}), EmptyDistributionError);
    const auto p = PricePMF::from_counts({1, 2, 3}, {1, 0, 3});
    CHECK(p.mass_at(2) == 0.0);
    CHECK(p.mass_at(3) == 0.75);
    CHECK(p.mass_at(7) == 0.0);
  }

  TEST_CASE("monthly PMFs skip empty months") {
    const std::vector<SalesRecord> recs{
        {"A", 2010, 2, 5, 3}, {"A", 2010, 1, 5, 1}, {"A", 2010, 3, 5, 0}, {"B", 2010, 4, 5, 1}};
    const auto months = build_monthly_pmfs(recs, "A");
    REQUIRE(months.size() == 2);
    CHECK(months[0].first == YearMonth{2010, 1});
    CHECK(months[1].second.n() == 3);
  }
}
