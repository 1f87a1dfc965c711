#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "diftrans/baseline.hpp"
#include "diftrans/error.hpp"

using namespace diftrans;

namespace {

std::vector<DidObservation> from_cell_logs(const std::array<std::array<double, 2>, 4>& cells) {
  // cells: treated pre, treated post, control pre, control post; two log prices each
  const bool treated[] = {true, true, false, false};
  const bool post[] = {false, true, false, true};
  std::vector<DidObservation> obs;
  for (int c = 0; c < 4; ++c)
    for (double y : cells[c]) obs.push_back({treated[c], post[c], std::exp(y), 1.0});
  return obs;
}

// Weighted normal equations X'WX b = X'Wy solved by Gaussian elimination with
// full pivoting.
std::array<double, 4> normal_equations(const std::vector<DidObservation>& obs) {
  double M[4][5] = {};
  for (const auto& o : obs) {
    const double x[4] = {1.0, o.treated ? 1.0 : 0.0, o.post ? 1.0 : 0.0,
                         (o.treated && o.post) ? 1.0 : 0.0};
    const double y = std::log(o.price);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) M[i][j] += o.weight * x[i] * x[j];
      M[i][4] += o.weight * x[i] * y;
    }
  }
  int col[4] = {0, 1, 2, 3};
  for (int k = 0; k < 4; ++k) {
    int pr = k, pc = k;
    for (int i = k; i < 4; ++i)
      for (int j = k; j < 4; ++j)
        if (std::abs(M[i][j]) > std::abs(M[pr][pc])) pr = i, pc = j;
    for (int j = 0; j < 5; ++j) std::swap(M[k][j], M[pr][j]);
    for (int i = 0; i < 4; ++i) std::swap(M[i][k], M[i][pc]);
    std::swap(col[k], col[pc]);
    for (int i = k + 1; i < 4; ++i) {
      const double f = M[i][k] / M[k][k];
      for (int j = k; j < 5; ++j) M[i][j] -= f * M[k][j];
    }
  }
  double z[4];
  for (int k = 3; k >= 0; --k) {
    double s = M[k][4];
    for (int j = k + 1; j < 4; ++j) s -= M[k][j] * z[j];
    z[k] = s / M[k][k];
  }
  std::array<double, 4> b{};
  for (int k = 0; k < 4; ++k) b[col[k]] = z[k];
  return b;
}

std::vector<DidObservation> random_design(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 12);
  std::uniform_real_distribution<double> logp(9.0, 13.0);
  std::uniform_real_distribution<double> w(0.5, 40.0);
  std::vector<DidObservation> obs;
  for (int c = 0; c < 4; ++c) {
    const int n = count(rng);
    for (int i = 0; i < n; ++i)
      obs.push_back({c >= 2, c % 2 == 1, std::exp(logp(rng)), std::round(w(rng))});
  }
  return obs;
}

double cell_mean(const std::vector<DidObservation>& obs, bool treated, bool post) {
  double sw = 0.0, sy = 0.0;
  for (const auto& o : obs)
    if (o.treated == treated && o.post == post) {
      sw += o.weight;
      sy += o.weight * std::log(o.price);
    }
  return sy / sw;
}

}  // namespace

TEST_SUITE("baseline") {
  TEST_CASE("cell means example") {
    const auto obs = from_cell_logs({{{0.9, 1.1}, {1.4, 1.6}, {0.4, 0.6}, {0.6, 0.8}}});
    const auto r = did_ols(obs);
    CHECK(r.alpha3 == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(r.alpha0 == doctest::Approx(0.5));
    CHECK(r.alpha1 == doctest::Approx(0.5));
    CHECK(r.alpha2 == doctest::Approx(0.2));
    CHECK(r.n_obs == 8);
    CHECK(r.r2 > 0.0);
    CHECK(r.r2 <= 1.0);
    // residual variance 0.01 * 8 / 4; intercept SE sqrt(sigma2 / 2)
    CHECK(r.se[0] == doctest::Approx(std::sqrt(0.02 / 2.0)));
    CHECK(r.se[3] == doctest::Approx(std::sqrt(0.02 * 4.0 / 2.0)));
  }

  TEST_CASE("identical treated and control") {
    std::mt19937_64 rng(4);
    auto obs = random_design(rng);
    std::vector<DidObservation> twin;
    for (const auto& o : obs)
      if (!o.treated) {
        twin.push_back(o);
        auto t = o;
        t.treated = true;
        twin.push_back(t);
      }
    const auto r = did_ols(twin);
    CHECK(std::abs(r.alpha1) <= 1e-12);
    CHECK(std::abs(r.alpha3) <= 1e-12);
  }

  TEST_CASE("random data: cell-mean identity and normal equations") {
    std::mt19937_64 rng(99);
    for (int k = 0; k < 200; ++k) {
      const auto obs = random_design(rng);
      const auto r = did_ols(obs);
      const double dd = (cell_mean(obs, true, true) - cell_mean(obs, true, false)) -
                        (cell_mean(obs, false, true) - cell_mean(obs, false, false));
      CHECK(std::abs(r.alpha3 - dd) <= 1e-12);
      const auto b = normal_equations(obs);
      CHECK(std::abs(r.alpha0 - b[0]) <= 1e-10);
      CHECK(std::abs(r.alpha1 - b[1]) <= 1e-10);
      CHECK(std::abs(r.alpha2 - b[2]) <= 1e-10);
      CHECK(std::abs(r.alpha3 - b[3]) <= 1e-10);
      CHECK(r.r2 >= 0.0);
      CHECK(r.r2 <= 1.0);
    }
  }

  TEST_CASE("scaling prices shifts only the intercept") {
    std::mt19937_64 rng(5);
    auto obs = random_design(rng);
    const auto a = did_ols(obs);
    for (auto& o : obs) o.price *= 7.0;
    const auto b = did_ols(obs);
    CHECK(b.alpha0 - a.alpha0 == doctest::Approx(std::log(7.0)));
    CHECK(std::abs(b.alpha1 - a.alpha1) <= 1e-12);
    CHECK(std::abs(b.alpha2 - a.alpha2) <= 1e-12);
    CHECK(std::abs(b.alpha3 - a.alpha3) <= 1e-12);
  }

  TEST_CASE("errors") {
    auto obs = from_cell_logs({{{0.9, 1.1}, {1.4, 1.6}, {0.4, 0.6}, {0.6, 0.8}}});
    auto missing = obs;
    missing.erase(missing.begin(), missing.begin() + 2);
    CHECK_THROWS_AS(did_ols(missing), SingularDesignError);
    obs[3].price = 0.0;
    CHECK_THROWS_AS(did_ols(obs), DomainError);
  }

  TEST_CASE("no residual degrees of freedom") {
    const std::vector<DidObservation> obs{
        {false, false, 1.0, 1.0}, {false, true, 2.0, 1.0}, {true, false, 3.0, 1.0},
        {true, true, 5.0, 1.0}};
    const auto r = did_ols(obs);
    CHECK(std::isnan(r.se[0]));
    CHECK(r.alpha3 == doctest::Approx(std::log(5.0 / 3.0) - std::log(2.0)));
  }

  TEST_CASE("observations from sales records") {
    const std::vector<SalesRecord> recs{
        {"B", 2010, 1, 100, 3}, {"B", 2011, 1, 200, 2}, {"T", 2010, 1, 100, 4},
        {"T", 2011, 1, 150, 1}, {"S", 2010, 1, 100, 9}, {"B", 2012, 5, 100, 9},
        {"T", 2011, 1, 170, 0}};
    const auto pre = PeriodFilter::parse("2010-01:2010-12");
    const auto post = PeriodFilter::parse("2011-01:2011-12");
    const auto units = did_observations(recs, "B", "T", pre, post);
    REQUIRE(units.size() == 4);
    CHECK(units[0].treated);
    CHECK_FALSE(units[0].post);
    CHECK(units[0].weight == 3.0);
    CHECK(did_ols(units).n_obs == 10);
    const auto rows = did_observations(recs, "B", "T", pre, post, DidWeighting::kRows);
    CHECK(did_ols(rows).n_obs == 4);
    CHECK(did_ols(units).alpha3 == doctest::Approx(did_ols(rows).alpha3));
    CHECK_THROWS(did_observations(recs, "B", "B", pre, post));
  }
}
