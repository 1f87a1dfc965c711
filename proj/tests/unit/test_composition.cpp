#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "composition_oracle.hpp"
#include "diftrans/composition.hpp"
#include "diftrans/error.hpp"

using namespace diftrans;
using diftrans::testing::CompositionData;

namespace {

constexpr std::int64_t kUnits = 1000;
constexpr double kRho = 0.5;

// Licenses chosen so that rho * L / n equals phi.
CompositionInputs make_inputs(const std::vector<std::int64_t>& support,
                              const std::vector<double>& phi,
                              const std::vector<std::vector<double>>& p) {
  CompositionInputs in;
  in.rho = kRho;
  for (std::size_t t = 0; t < phi.size(); ++t) {
    const YearMonth ym{2010, static_cast<int>(t) + 1};
    in.monthly_pmfs.emplace_back(ym, PricePMF::from_masses(support, p[t], kUnits));
    in.licenses.emplace_back(ym, std::llround(phi[t] * kUnits / kRho));
  }
  return in;
}

std::vector<double> normalized(std::vector<double> v) {
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (auto& x : v) x /= s;
  return v;
}

std::vector<double> dirichlet(std::mt19937_64& rng, std::size_t k) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> v(k);
  for (auto& x : v) x = g(rng);
  return normalized(v);
}

std::vector<double> values(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_SUITE("composition") {
  TEST_CASE("simplex projection") {
    const std::vector<double> a{0.5, 0.5, 0.5};
    for (double x : project_to_simplex(a)) CHECK(x == doctest::Approx(1.0 / 3.0));
    CHECK(project_to_simplex(std::vector<double>{2.0, 0.0}) == std::vector<double>{1.0, 0.0});
    const std::vector<double> inside{0.2, 0.3, 0.5};
    const auto same = project_to_simplex(inside);
    for (std::size_t i = 0; i < 3; ++i) CHECK(same[i] == doctest::Approx(inside[i]).epsilon(1e-15));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
      std::vector<double> v(7);
      for (auto& x : v) x = n(rng);
      const auto p = project_to_simplex(v);
      double s = 0.0;
      for (double x : p) {
        CHECK(x >= 0.0);
        s += x;
      }
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }

  TEST_CASE("separable periods are recovered exactly") {
    const std::vector<std::int64_t> support{100, 200, 300, 400};
    const std::vector<double> p1{0.1, 0.2, 0.3, 0.4}, p2{0.4, 0.4, 0.1, 0.1};
    const auto est = composition_fit(make_inputs(support, {1.0, 0.0}, {p1, p2}));
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(std::abs(est.f_hat.mass()[i] - p1[i]) <= 1e-9);
      CHECK(std::abs(est.r_hat.mass()[i] - p2[i]) <= 1e-9);
    }
    CHECK(est.residual_ss <= 1e-16);
    CHECK(est.f_identified);
    CHECK(est.r_identified);
  }

  TEST_CASE("disjoint planted components are recovered from noise-free mixtures") {
    const std::vector<std::int64_t> support{1000, 2000, 3000, 4000};
    const std::vector<double> f{0.6, 0.4, 0.0, 0.0}, r{0.0, 0.0, 0.3, 0.7};
    std::vector<std::vector<double>> p;
    const std::vector<double> phi{0.2, 0.5, 0.8};
    for (double w : phi) {
      std::vector<double> row(4);
      for (std::size_t i = 0; i < 4; ++i) row[i] = w * f[i] + (1.0 - w) * r[i];
      p.push_back(normalized(row));
    }
    const auto est = composition_fit(make_inputs(support, phi, p));
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(std::abs(est.f_hat.mass()[i] - f[i]) <= 1e-8);
      CHECK(std::abs(est.r_hat.mass()[i] - r[i]) <= 1e-8);
    }
    const auto corr = composition_correction(est, std::vector<Bandwidth>{Bandwidth(0), Bandwidth(999)});
    CHECK(corr.cost.at(Bandwidth(0)) == doctest::Approx(1.0));
    CHECK(corr.cost.at(Bandwidth(999)) == doctest::Approx(1.0));
    CHECK(corr.p_pre.mass()[0] == doctest::Approx(0.3));
    CHECK(corr.p_post.mass()[3] == doctest::Approx(0.35));
  }

  TEST_CASE("constant first-time share of one leaves r unidentified") {
    const std::vector<std::int64_t> support{1, 2, 3};
    const std::vector<double> p1{0.2, 0.3, 0.5}, p2{0.4, 0.4, 0.2};
    const auto est = composition_fit(make_inputs(support, {1.0, 1.0}, {p1, p2}));
    CHECK(est.f_identified);
    CHECK_FALSE(est.r_identified);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(est.f_hat.mass()[i] - 0.5 * (p1[i] + p2[i])) <= 1e-9);
      CHECK(std::abs(est.r_hat.mass()[i] - 0.5 * (p1[i] + p2[i])) <= 1e-12);
    }
  }

  TEST_CASE("identical interior shares are not identified") {
    const std::vector<std::int64_t> support{1, 2};
    CHECK_THROWS_AS(composition_fit(make_inputs(support, {0.3, 0.3}, {{0.5, 0.5}, {0.2, 0.8}})),
                    IdentificationError);
  }

  TEST_CASE("input validation") {
    const std::vector<std::int64_t> support{1, 2};
    auto in = make_inputs(support, {0.3, 0.6}, {{0.5, 0.5}, {0.2, 0.8}});
    auto bad = in;
    bad.rho = 0.0;
    CHECK_THROWS_AS(composition_fit(bad), ValidationError);
    bad = in;
    bad.licenses.pop_back();
    CHECK_THROWS_AS(composition_fit(bad), ValidationError);
    bad = in;
    bad.licenses[0].second = 5000;  // share above one
    CHECK_THROWS_AS(composition_fit(bad), ValidationError);
    bad = in;
    bad.theta_pre = {0.7, 0.7};
    CHECK_THROWS_AS(composition_fit(bad), ValidationError);
  }

  TEST_CASE("random instances match the grid oracle and are stationary") {
    std::mt19937_64 rng(42);
    const std::vector<std::int64_t> support{10, 20, 30, 40};
    std::uniform_int_distribution<int> phi_pick(1, 19);
    for (int k = 0; k < 4; ++k) {
      CompositionData data;
      for (int t = 0; t < 3; ++t) {
        data.phi.push_back(0.05 * phi_pick(rng));
        data.p.push_back(dirichlet(rng, 4));
      }
      if (data.phi[0] == data.phi[1] && data.phi[1] == data.phi[2]) data.phi[2] = 0.5 * data.phi[2];
      const auto in = make_inputs(support, data.phi, data.p);
      const auto est = composition_fit(in);
      const auto f = values(est.f_hat.mass()), r = values(est.r_hat.mass());
      const double fitted = diftrans::testing::composition_ss(data, f, r);
      CHECK(std::abs(fitted - est.residual_ss) <= 1e-12);
      CHECK(est.gradient_mapping_norm < 1e-8);
      const auto grid = diftrans::testing::composition_grid_search(data, 50);
      CHECK(fitted <= grid.value + 1e-12);
      CHECK(grid.value - fitted <= 1e-3);

      // Restarting from the solution does not increase the objective.
      const auto again = composition_fit(in, std::array<std::vector<double>, 2>{f, r});
      CHECK(again.residual_ss <= est.residual_ss + 1e-15);
    }
  }

  TEST_CASE("correction of equal components is zero") {
    const std::vector<std::int64_t> support{1, 2, 3};
    const std::vector<double> p{0.2, 0.3, 0.5};
    const auto est = composition_fit(make_inputs(support, {0.2, 0.7}, {p, p}));
    const auto corr = composition_correction(est, std::vector<Bandwidth>{Bandwidth(0)});
    CHECK(corr.cost.at(Bandwidth(0)) <= 1e-8);
  }
}
