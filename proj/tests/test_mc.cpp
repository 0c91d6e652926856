#include <cmath>
#include <random>

#include "chaosx/errors.hpp"
#include "chaosx/mc.hpp"
#include "doctest.h"

using namespace chaosx;
using asympt::ProcessModel;

namespace {

homog::HomogeneousSpec chi2() { return homog::HomogeneousSpec::lrho_norm(2.0, 2.0, 2); }

ProcessModel chi_model(double T = 1.0) {
  return ProcessModel::build(chi2(), gauss::StationaryExp{1.0, 1.0}, gauss::UnitVariance{}, {}, T);
}

constants::ConstantTable unit_h1() {
  constants::ConstantTable t;
  t.put(constants::ConstantKey::pickands(1.0), {.value = 1.0});
  return t;
}

}  // namespace

TEST_CASE("wilson interval") {
  auto [lo, hi] = mc::wilson(0, 100);
  CHECK(lo == 0.0);
  CHECK(hi > 0.0);
  CHECK(hi < 0.05);
  std::tie(lo, hi) = mc::wilson(100, 100);
  CHECK(hi == 1.0);
  CHECK(lo < 1.0);
  // Textbook value: 10/100 -> [0.0552, 0.1744].
  std::tie(lo, hi) = mc::wilson(10, 100);
  CHECK(lo == doctest::Approx(0.05523).epsilon(1e-3));
  CHECK(hi == doctest::Approx(0.17437).epsilon(1e-3));
  CHECK_THROWS_AS(mc::wilson(5, 0), PreconditionError);
  CHECK_THROWS_AS(mc::wilson(5, 4), PreconditionError);
}

TEST_CASE("wilson coverage on a Bernoulli stream") {
  std::mt19937_64 rng(2024);
  const double q = 1e-3;
  const std::int64_t n = 20000;
  std::binomial_distribution<std::int64_t> draw(n, q);
  int covered = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto [lo, hi] = mc::wilson(draw(rng), n);
    covered += (lo <= q && q <= hi);
  }
  CHECK(covered >= 930);
}

TEST_CASE("threshold below the range gives certainty") {
  const auto e = mc::estimate_sup_prob(chi_model(), 0.0, {.n_samples = 1000, .seed = 3});
  CHECK(e.hits == 1000);
  CHECK(e.p_hat == 1.0);
  CHECK(e.ci_high == 1.0);
  CHECK(e.ci_low <= e.p_hat);
}

TEST_CASE("single time point matches the chi-square tail") {
  // A perfectly correlated pair of grid points is one time point.
  const auto m = ProcessModel::build(chi2(), gauss::CustomPSDMatrix{Eigen::MatrixXd::Ones(2, 2)},
                                     gauss::UnitVariance{}, {}, 1.0);
  const std::int64_t n = 1000000;
  const auto e = mc::estimate_sup_prob(m, 16.0, {.n_samples = n, .seed = 11});
  const double q = std::exp(-8.0);
  const double se = std::sqrt(q * (1 - q) / static_cast<double>(n));
  CHECK(std::abs(e.p_hat - q) < 4.0 * se);
  CHECK(e.ci_low <= e.p_hat);
  CHECK(e.p_hat <= e.ci_high);
}

TEST_CASE("monotone in u and under refinement with common paths") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto g_list = {chi2(), homog::HomogeneousSpec::max(2), homog::HomogeneousSpec::product(2)};
  int cases = 0;
  for (int c = 0; c < 100; ++c) {
    const auto& g = *(g_list.begin() + c % 3);
    const double alpha = 0.5 + 1.5 * unif(rng);
    auto m = ProcessModel::build(g, gauss::StationaryExp{0.5 + 2.0 * unif(rng), alpha},
                                 gauss::UnitVariance{}, {}, 0.5 + unif(rng));
    m.trend.h = [a = unif(rng)](double t) { return a * std::sin(6.0 * t); };
    const double step = 0.02 + 0.05 * unif(rng);
    const auto grid = mc::simulation_grid(m, step);
    std::vector<double> us;
    for (int k = 0; k < 5; ++k) us.push_back(0.5 + 1.5 * k * unif(rng) + k);
    std::sort(us.begin(), us.end());
    const auto hits = mc::count_exceedances(m, grid, us, 1000, 1000 + c, 1, {1, 2, 4});
    bool ok = true;
    for (std::size_t q = 0; q < us.size(); ++q) {
      if (q > 0 && hits[0][q] > hits[0][q - 1]) ok = false;
      if (hits[0][q] < hits[1][q] || hits[1][q] < hits[2][q]) ok = false;
    }
    cases += ok;
  }
  CHECK(cases == 100);
}

TEST_CASE("determinism and thread independence") {
  const auto m = chi_model();
  const auto grid = mc::simulation_grid(m, 0.02);
  const auto a = mc::count_exceedances(m, grid, {6.0, 8.0}, 3000, 5, 1);
  const auto b = mc::count_exceedances(m, grid, {6.0, 8.0}, 3000, 5, 3);
  const auto c = mc::count_exceedances(m, grid, {6.0, 8.0}, 3000, 5, 1);
  CHECK(a == b);
  CHECK(a == c);
  const auto d = mc::count_exceedances(m, grid, {6.0, 8.0}, 3000, 6, 1);
  CHECK(a != d);
}

TEST_CASE("grid selection") {
  const auto m = chi_model(2.0);
  CHECK(mc::auto_grid_step(m, 10.0) == doctest::Approx(0.01));
  CHECK(mc::auto_grid_step(m, 0.0) == doctest::Approx(0.1));
  const auto g = mc::simulation_grid(m, 0.3);
  CHECK(g.n_points == 8);
  CHECK(g.step() <= 0.3);
  CHECK(mc::simulation_grid(m, 0.5).n_points == 5);
  CHECK_THROWS_AS(mc::simulation_grid(m, 0.0), PreconditionError);
  // Scaling g rescales the auto step through u / g_hat.
  auto big = ProcessModel::build(chi2().scaled(4.0), gauss::StationaryExp{1.0, 1.0},
                                 gauss::UnitVariance{}, {}, 2.0);
  CHECK(mc::auto_grid_step(big, 40.0) == doctest::Approx(0.01));
}

TEST_CASE("comparison rows") {
  const auto m = chi_model();
  const auto table = unit_h1();
  const auto rows = mc::compare(m, {2.0, 6.0, 8.0}, {.n_samples = 4000, .seed = 2}, table);
  REQUIRE(rows.size() == 3);
  CHECK(std::isnan(rows[0].asympt_value));
  CHECK_FALSE(rows[0].mc.warnings.empty());
  for (std::size_t q = 1; q < 3; ++q) {
    CHECK(rows[q].regime == asympt::Regime::StationaryIntegral);
    CHECK(rows[q].asympt_value == asympt::evaluate(m, rows[q].u, table).value);
    CHECK(rows[q].ratio == rows[q].mc.p_hat / rows[q].asympt_value);
    CHECK(rows[q].mc.grid_step == rows[0].mc.grid_step);
    CHECK(rows[q].mc.hits <= rows[q - 1].mc.hits);
  }
  // Shared grid is the finest auto step.
  CHECK(rows[0].mc.grid_step <= mc::auto_grid_step(m, 8.0));

  CHECK_THROWS_AS(mc::compare(m, {8.0}, {.n_samples = 0}, table), PreconditionError);
  CHECK_THROWS_AS(mc::compare(m, {}, {.n_samples = 1000}, table), PreconditionError);
  CHECK_THROWS_AS(mc::compare(m, {8.0}, {.n_samples = 1000}, constants::ConstantTable{}),
                  DependencyError);

  const auto far = mc::compare(m, {40.0}, {.n_samples = 1000}, table);
  REQUIRE_FALSE(far[0].mc.warnings.empty());
  CHECK(far[0].mc.warnings[0].find("under-powered") != std::string::npos);
  CHECK(far[0].mc.hits == 0);
}
