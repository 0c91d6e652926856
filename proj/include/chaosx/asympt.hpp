#pragma once

// First-order tail asymptotics of sup_{[0,T]} (Y(t) + h(t)), Y = g(X), for
// non-stationary (variance peaking at t0) and locally stationary X.

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "chaosx/constants.hpp"
#include "chaosx/gauss.hpp"
#include "chaosx/homog.hpp"

namespace chaosx::asympt {

// h(t0) - h(t) ~ c |t - t0|^gamma near t0.
struct SinglePoint {
  double t0 = 0;
  double c = 0;
  double gamma = 1;
};
struct PointSet {
  std::vector<SinglePoint> points;
};
struct Interval {
  double A = 0;
  double B = 1;
};
struct NullTrend {};
using TrendMaximizer = std::variant<NullTrend, SinglePoint, PointSet, Interval>;

struct TrendSpec {
  std::function<double(double)> h;  // empty means h = 0
  double h_m = 0;                   // max of h over [0, T]
  TrendMaximizer maximizer = NullTrend{};

  double at(double t) const { return h ? h(t) : 0.0; }
  bool is_null() const { return std::holds_alternative<NullTrend>(maximizer); }
};

enum class Location { Boundary, Interior };

struct ProcessModel {
  homog::HomogeneousSpec g = homog::HomogeneousSpec::max(2);
  homog::SphereAnalysis analysis;
  gauss::CorrelationSpec corr = gauss::StationaryExp{};
  gauss::VarianceSpec var = gauss::UnitVariance{};
  TrendSpec trend;
  double T = 1;
  // Position of t0 (variance peak, or the single trend maximizer).
  Location t0_location = Location::Boundary;

  // Fills `analysis` from g.
  static ProcessModel build(homog::HomogeneousSpec g, gauss::CorrelationSpec corr,
                            gauss::VarianceSpec var, TrendSpec trend, double T,
                            Location t0_location = Location::Boundary);
  double p() const { return g.p(); }
  double alpha() const;
  double a_at(double t) const;
};

enum class Regime {
  Pickands,
  Piterbarg,
  Talagrand,
  StationaryIntegral,
  WeightedIntegral,
  MultiPoint,
  IntervalMax,
};
std::string to_string(Regime r);

struct Exponents {
  double alpha_star = 0;
  double beta_star = 0;
  Regime regime = Regime::Pickands;
  // Which terms of f attain beta* (both on a tie).
  bool beta_term = false;
  bool gamma_term = false;
};

// With beta: the non-stationary exponents (gamma only when c > 0). Without
// beta: the locally stationary single-maximum exponents, which need gamma and
// p < 2.
Exponents exponents(double p, double alpha, std::optional<double> beta,
                    std::optional<double> gamma);

struct AsymptoticResult {
  double u = 0;
  double value = 0;
  Regime regime = Regime::Pickands;
  double alpha_star = 0;
  double beta_star = 0;  // +infinity when no decay exponent applies
  double exponent = 0;   // power of u / g_hat
  double constant = 0;   // C_{t0}, or the integral prefactor
  double tail = 0;       // the P(Y > u - shift) factor
  std::optional<double> H_alpha;
  std::optional<double> P_const;
  std::optional<double> integral;
  double h0 = 0;
};

// int_0^inf exp(-f(t)) dt; Gamma-function closed form for one power term.
double drift_integral(const constants::DriftFunctionSpec& f);

AsymptoticResult thm3_tail(const ProcessModel& m, double u, const constants::ConstantTable& table);
AsymptoticResult thm1_stationary_tail(const ProcessModel& m, double u,
                                      const constants::ConstantTable& table);
AsymptoticResult thm1_single_max_tail(const ProcessModel& m, double u,
                                      const constants::ConstantTable& table);
AsymptoticResult thm1_p_ge2_tail(const ProcessModel& m, double u,
                                 const constants::ConstantTable& table);
AsymptoticResult multi_point_tail(const ProcessModel& m, double u,
                                  const constants::ConstantTable& table);
AsymptoticResult interval_max_tail(const ProcessModel& m, double u,
                                   const constants::ConstantTable& table);

// Picks the formula matching the model's shape.
AsymptoticResult evaluate(const ProcessModel& m, double u, const constants::ConstantTable& table);

// Constants the formula for this model will look up (for precomputation).
std::vector<constants::ConstantKey> required_constants(const ProcessModel& m);

// Checks cross-field consistency (correlation/variance/trend kinds, (ht2) fit
// of the trend near t0 within 5%); throws ApplicabilityError.
void check_model(const ProcessModel& m);

}  // namespace chaosx::asympt
