#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "chaosx/constants.hpp"
#include "chaosx/errors.hpp"
#include "chaosx/gauss.hpp"
#include "chaosx/numerics.hpp"
#include "doctest.h"

using namespace chaosx;
using namespace chaosx::constants;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RunOptions reps(int n, std::uint64_t seed = 1) {
  RunOptions r;
  r.n_rep = n;
  r.seed = seed;
  return r;
}

// alpha = 2: B(t) = tZ, so sup_{0<=t<=S} sqrt(2) t Z - t^2 is 0 (Z <= 0),
// Z^2/2 (peak inside), or sqrt(2) S Z - S^2; integrate over Z.
double h2_finite_oracle(double S) {
  auto sup = [S](double z) {
    if (z <= 0) return 0.0;
    const double t = z / std::sqrt(2.0);
    return t <= S ? 0.5 * z * z : std::sqrt(2.0) * S * z - S * S;
  };
  return num::integrate(
      [&](double z) { return std::exp(sup(z) - 0.5 * z * z) / std::sqrt(2.0 * num::kPi); }, -kInf,
      kInf, 1e-12);
}

// alpha = 2, a = 1, f = t^2: sup_{t>=0} sqrt(2) t Z - 2 t^2 = Z^2/4 for Z > 0.
double piterbarg_t2_oracle() {
  return 0.5 + num::integrate(
                   [](double z) { return std::exp(-0.25 * z * z) / std::sqrt(2.0 * num::kPi); },
                   0.0, kInf, 1e-12);
}

}  // namespace

TEST_CASE("drift functions") {
  const PowerSum f{2.0, 1.5, 1.0, 3.0};
  CHECK(eval_drift(f, 0.0) == 0.0);
  CHECK(eval_drift(f, 2.0) == doctest::Approx(2.0 * std::pow(2.0, 1.5) + 8.0));
  CHECK(eval_drift(f, -2.0) == eval_drift(f, 2.0));
  CHECK(eval_drift(ZeroDrift{}, 3.0) == 0.0);
  CHECK(describe(ZeroDrift{}) == "0");
  CHECK(describe(PowerSum{0.0, 5.0, 0.0, 2.0}) == "0");
  CHECK(describe(PowerSum{1.0, 2.0, 0.0, 7.0}) == "1*t^2");
  CHECK(describe(PowerSum{1.0, 3.0, 0.5, 1.0}) == "0.5*t^1+1*t^3");
  CHECK(describe(PowerSum{1.0, 2.0, 0.5, 2.0}) == "1.5*t^2");
  CHECK_THROWS_AS(validate(PowerSum{-1.0, 2.0, 0.0, 1.0}), DomainError);
  CHECK_THROWS_AS(validate(PowerSum{1.0, 0.0, 0.0, 1.0}), DomainError);
}

TEST_CASE("pickands_finite degenerate domains") {
  CHECK(pickands_finite(1.0, 0.0, 0.1, reps(100)).value == 1.0);
  const auto tiny = pickands_finite(1.0, 1e-4, 1e-4, reps(20000));
  CHECK(std::abs(tiny.value - 1.0) <= 3.0 * tiny.std_error + 0.02);
  CHECK_THROWS_AS(pickands_finite(1.0, 1.0, 0.3, reps(10)), PreconditionError);
  CHECK_THROWS_AS(pickands_finite(0.0, 1.0, 0.1, reps(10)), DomainError);
  CHECK_THROWS_AS(pickands_finite(1.0, 1.0, 0.1, reps(0)), PreconditionError);
}

TEST_CASE("both estimators match the alpha = 2 closed form") {
  // E = 1 + S / sqrt(pi): half from Z <= 0, S/sqrt(pi) from interior peaks,
  // half from peaks beyond S.
  CHECK(h2_finite_oracle(4.0) == doctest::Approx(1.0 + 4.0 / std::sqrt(num::kPi)).epsilon(1e-9));
  // The direct estimator has a heavy right tail here; keep S short for it.
  const double s_direct = 0.5, s_shift = 4.0, delta = 0.01;
  const auto direct = pickands_finite(2.0, s_direct, delta, reps(40000, 3), Estimator::Direct);
  const auto shifted = pickands_finite(2.0, s_shift, delta, reps(4000, 3), Estimator::ShiftAveraged);
  CHECK(std::abs(direct.value - h2_finite_oracle(s_direct)) <= 3.0 * direct.std_error);
  CHECK(std::abs(shifted.value - h2_finite_oracle(s_shift)) <= 3.0 * shifted.std_error + 1e-3);
}

TEST_CASE("direct and shift-averaged estimators agree for alpha = 1") {
  const auto direct = pickands_finite(1.0, 2.0, 0.05, reps(20000, 8), Estimator::Direct);
  const auto shifted = pickands_finite(1.0, 2.0, 0.05, reps(20000, 9), Estimator::ShiftAveraged);
  CHECK(std::abs(direct.value - shifted.value) <=
        3.0 * std::hypot(direct.std_error, shifted.std_error));
}

TEST_CASE("grid refinement never lowers a path supremum") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ua(0.2, 2.0);
  for (int c = 0; c < 100; ++c) {
    const double alpha = ua(rng);
    const double delta = 0.1;
    const gauss::GridSpec grid{0.0, 5.0, 101};  // step delta / 2
    const auto path = gauss::simulate_fbm(alpha, grid, static_cast<std::uint64_t>(c));
    const PowerSum f{0.5, 1.0, 0.0, 1.0};
    const double fine = sup_exponent(path.values, delta / 2, alpha, 1.0, f, 1);
    const double coarse = sup_exponent(path.values, delta / 2, alpha, 1.0, f, 2);
    CHECK(fine >= coarse);
  }
}

TEST_CASE("subadditivity with common random numbers") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ua(0.5, 2.0);
  std::uniform_int_distribution<int> us(1, 20);
  for (int c = 0; c < 100; ++c) {
    const double alpha = ua(rng);
    const double delta = 0.1;
    const double s1 = us(rng) * delta, s2 = us(rng) * delta;
    const auto run = reps(40, static_cast<std::uint64_t>(c));
    const auto h12 = pickands_finite(alpha, s1 + s2, delta, run, Estimator::ShiftAveraged);
    const auto h1 = pickands_finite(alpha, s1, delta, run, Estimator::ShiftAveraged);
    const auto h2 = pickands_finite(alpha, s2, delta, run, Estimator::ShiftAveraged);
    const double pooled = std::sqrt(h12.std_error * h12.std_error + h1.std_error * h1.std_error +
                                    h2.std_error * h2.std_error);
    CHECK(h12.value <= h1.value + h2.value + 2.0 * pooled);
    // path by path the inequality is exact
    CHECK(h12.value <= h1.value + h2.value + 1e-12);
  }
}

TEST_CASE("pickands ladder") {
  PickandsOptions opts;
  opts.run = reps(2000, 5);
  const auto h2 = pickands(2.0, opts);
  CHECK(h2.extrapolated);
  CHECK(h2.ladder.size() == 9);
  CHECK(h2.value > 0.52);
  CHECK(h2.value < 0.60);
  // each S row grows as delta shrinks
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t k = 1; k < 3; ++k) CHECK(h2.ladder[s * 3 + k].value >= h2.ladder[s * 3 + k - 1].value);
  CHECK(h2.warnings.empty());

  const auto h1 = pickands(1.0, opts);
  CHECK(h1.value > 0.90 - 3 * h1.std_error);
  CHECK(h1.value < 1.05 + 3 * h1.std_error);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t k = 1; k < 3; ++k) CHECK(h1.ladder[s * 3 + k].value >= h1.ladder[s * 3 + k - 1].value);

  PickandsOptions bad = opts;
  bad.delta_list = {0.2, 0.07};
  CHECK_THROWS_AS(pickands(1.0, bad), PreconditionError);
}

TEST_CASE("results do not depend on the worker count") {
  RunOptions one = reps(3000, 77), four = reps(3000, 77);
  one.threads = 1;
  four.threads = 4;
  const auto a = pickands_finite(1.5, 3.0, 0.1, one);
  const auto b = pickands_finite(1.5, 3.0, 0.1, four);
  CHECK(a.value == b.value);
  CHECK(a.std_error == b.std_error);
  PiterbargOptions p1, p4;
  p1.run = one;
  p4.run = four;
  const PowerSum f{1.0, 1.0, 0.0, 1.0};
  CHECK(piterbarg(1.0, 1.0, f, Domain::FullLine, p1).value ==
        piterbarg(1.0, 1.0, f, Domain::FullLine, p4).value);
}

TEST_CASE("piterbarg constant") {
  const PowerSum t2{1.0, 2.0, 0.0, 1.0};
  SUBCASE("degenerate domain") {
    PiterbargOptions o;
    o.S = 0.0;
    CHECK(piterbarg(1.0, 1.0, t2, Domain::HalfLine, o).value == 1.0);
  }
  SUBCASE("closed-form oracle at alpha = 2") {
    const double oracle = piterbarg_t2_oracle();
    CHECK(oracle == doctest::Approx((1.0 + std::sqrt(2.0)) / 2.0).epsilon(1e-10));
    PiterbargOptions o;
    o.run = reps(20000, 1);
    const auto est = piterbarg(2.0, 1.0, t2, Domain::HalfLine, o);
    CHECK(std::abs(est.value - oracle) <= 2.0 * est.std_error);
    CHECK(est.truncation_bound <= 1e-3);
  }
  SUBCASE("estimates are at least 1 and dominated by smaller drifts") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ua(0.3, 2.0), uc(1.0, 3.0), ue(0.8, 2.0);
    for (int c = 0; c < 20; ++c) {
      const double alpha = ua(rng), a = uc(rng);
      const PowerSum f{uc(rng), ue(rng), uc(rng), ue(rng)};
      PowerSum g = f;
      g.c_gamma *= 0.5;
      PiterbargOptions o;
      o.S = 16.0;
      o.delta = 0.05;
      o.run = reps(200, static_cast<std::uint64_t>(c));
      for (Domain d : {Domain::HalfLine, Domain::FullLine}) {
        const auto pf = piterbarg(alpha, a, f, d, o);
        const auto pg = piterbarg(alpha, a, g, d, o);
        CHECK(pf.value >= 1.0);
        CHECK(pf.value <= pg.value);
      }
    }
  }
  SUBCASE("full line exceeds half line") {
    PiterbargOptions o;
    o.run = reps(4000, 2);
    const PowerSum f{1.0, 1.0, 0.0, 1.0};
    CHECK(piterbarg(1.0, 1.0, f, Domain::FullLine, o).value >
          piterbarg(1.0, 1.0, f, Domain::HalfLine, o).value);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(piterbarg(1.0, 1.0, ZeroDrift{}, Domain::HalfLine), PreconditionError);
    PiterbargOptions o;
    o.S = 1.0;
    o.run = reps(100);
    CHECK_THROWS_AS(piterbarg(1.0, 1.0, PowerSum{0.1, 0.5, 0, 1}, Domain::HalfLine, o), HorizonError);
    CHECK_THROWS_AS(piterbarg(1.0, -1.0, t2, Domain::HalfLine, o), DomainError);
  }
}

TEST_CASE("truncation bound") {
  // sum_{k > S/delta} exp(-k delta) = e^{-S-delta} / (1 - e^{-delta})
  const PowerSum lin{1.0, 1.0, 0.0, 1.0};
  const double want = std::exp(-5.1) / (1.0 - std::exp(-0.1));
  CHECK(truncation_bound(lin, Domain::HalfLine, 5.0, 0.1) == doctest::Approx(want).epsilon(1e-12));
  CHECK(truncation_bound(lin, Domain::FullLine, 5.0, 0.1) == doctest::Approx(2 * want).epsilon(1e-12));
  CHECK(std::isinf(truncation_bound(ZeroDrift{}, Domain::HalfLine, 5.0, 0.1)));
}

TEST_CASE("constant table keys") {
  ConstantTable table;
  ConstantEstimate e;
  e.value = 0.99;
  table.put(ConstantKey::pickands(1.0), e);
  CHECK(table.contains(ConstantKey::pickands(1.0)));
  CHECK(table.require(ConstantKey::pickands(1.0)).value == 0.99);
  // a, f and domain are irrelevant for Pickands keys
  ConstantKey k = ConstantKey::pickands(1.0);
  k.a = 3.0;
  CHECK(table.contains(k));

  const auto pk = ConstantKey::piterbarg(1.0, 2.0, PowerSum{1.0, 2.0, 0.0, 9.0}, Domain::HalfLine);
  CHECK(pk.to_string() == "piterbarg(alpha=1,a=2,f=1*t^2,domain=half)");
  CHECK(ConstantKey::piterbarg(1.0, 2.0, PowerSum{0.0, 3.0, 1.0, 2.0}, Domain::HalfLine).to_string() ==
        pk.to_string());
  try {
    table.require(pk);
    FAIL("expected DependencyError");
  } catch (const DependencyError& err) {
    CHECK(err.key() == pk.to_string());
  }
}
