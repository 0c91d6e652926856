#include "chaosx/asympt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chaosx/errors.hpp"
#include "chaosx/numerics.hpp"

namespace chaosx::asympt {

namespace {

using constants::ConstantKey;
using constants::DriftFunctionSpec;
using constants::Domain;
using constants::PowerSum;
using Lookup = std::function<double(const ConstantKey&)>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTol = 1e-12;
constexpr double kFitTol = 0.05;
constexpr double kQuadTol = 1e-10;

bool same(double x, double y) { return std::abs(x - y) <= kTieTol * std::max(std::abs(x), std::abs(y)); }

Regime classify(double alpha_star, double beta_star) {
  if (same(alpha_star, beta_star)) return Regime::Piterbarg;
  return beta_star > alpha_star ? Regime::Pickands : Regime::Talagrand;
}

double u_power(const Exponents& ex) {
  if (ex.regime != Regime::Pickands) return 0.0;
  return std::max(0.0, 2.0 / ex.alpha_star - 2.0 / ex.beta_star);
}

const gauss::LocalPower* local_power(const ProcessModel& m) {
  return std::get_if<gauss::LocalPower>(&m.var);
}

void require_unit_variance(const ProcessModel& m, const char* op) {
  if (local_power(m))
    throw ApplicabilityError(std::string(op) +
                             " needs unit variance; a variance peak calls for the non-stationary formula");
}

// int_lo^hi a(t)^{1/alpha} w(t) dt; exact for constant a without weight.
double a_integral(const ProcessModel& m, double lo, double hi,
                  const std::function<double(double)>& weight = {}) {
  const double alpha = m.alpha();
  if (const auto* se = std::get_if<gauss::StationaryExp>(&m.corr); se && !weight)
    return std::pow(se->a, 1.0 / alpha) * (hi - lo);
  return num::integrate(
      [&](double t) {
        const double w = weight ? weight(t) : 1.0;
        return std::pow(m.a_at(t), 1.0 / alpha) * w;
      },
      lo, hi, kQuadTol);
}

struct PointConstant {
  double C = 1;
  std::optional<double> H, P, integral;
};

PointConstant point_constant(const Exponents& ex, double alpha, double a, const DriftFunctionSpec& f,
                             bool interior, const Lookup& lookup) {
  PointConstant pc;
  switch (ex.regime) {
    case Regime::Pickands: {
      pc.H = lookup(ConstantKey::pickands(alpha));
      pc.integral = drift_integral(f);
      pc.C = (interior ? 2.0 : 1.0) * *pc.H * std::pow(a, 1.0 / alpha) * *pc.integral;
      break;
    }
    case Regime::Piterbarg:
      pc.P = lookup(ConstantKey::piterbarg(alpha, a, f, interior ? Domain::FullLine : Domain::HalfLine));
      pc.C = *pc.P;
      break;
    default:
      pc.C = 1.0;
  }
  return pc;
}

void fill(AsymptoticResult& r, const Exponents& ex, const PointConstant& pc) {
  r.regime = ex.regime;
  r.alpha_star = ex.alpha_star;
  r.beta_star = ex.beta_star;
  r.exponent = u_power(ex);
  r.constant = pc.C;
  r.H_alpha = pc.H;
  r.P_const = pc.P;
  r.integral = pc.integral;
}

void finish(AsymptoticResult& r, const ProcessModel& m, double u, double shift) {
  r.u = u;
  r.h0 = m.analysis.h0;
  r.tail = homog::tail_asympt(m.analysis, m.p(), u - shift);
  r.value = r.constant * std::pow(u / m.analysis.g_hat, r.exponent) * r.tail;
}

bool on_boundary(const ProcessModel& m, double t) {
  return std::abs(t) <= 1e-12 * std::max(1.0, m.T) || std::abs(t - m.T) <= 1e-12 * std::max(1.0, m.T);
}

// (ht2) check: (h(t0) - h(t)) / (c |t - t0|^gamma) -> 1 as t -> t0.
void check_fit(const ProcessModel& m, const SinglePoint& sp) {
  if (!m.trend.h || sp.c == 0.0) return;
  const double h0 = m.trend.h(sp.t0);
  const double eps = 1e-4 * m.T;
  for (double side : {-1.0, 1.0}) {
    const double t = sp.t0 + side * eps;
    if (t < 0.0 || t > m.T) continue;
    const double ratio = (h0 - m.trend.h(t)) / (sp.c * std::pow(eps, sp.gamma));
    if (!(std::abs(ratio - 1.0) <= kFitTol))
      throw ApplicabilityError("trend does not behave like h(t0) - c|t - t0|^gamma near t0=" +
                               num::format_double(sp.t0) + " (ratio " + num::format_double(ratio) +
                               " at distance " + num::format_double(eps) + ")");
  }
}

AsymptoticResult thm3_impl(const ProcessModel& m, double u, const Lookup& lookup) {
  const auto* lp = local_power(m);
  if (!lp) throw ApplicabilityError("the non-stationary formula needs a LocalPower variance profile");
  const double ghat = m.analysis.g_hat;
  double c = 0.0, gamma = 1.0;
  if (const auto* sp = std::get_if<SinglePoint>(&m.trend.maximizer)) {
    if (std::abs(sp->t0 - lp->t0) > 1e-12 * std::max(1.0, m.T))
      throw ApplicabilityError("trend point t0 must coincide with the variance peak t0");
    c = sp->c;
    gamma = sp->gamma;
  } else if (!m.trend.is_null()) {
    throw ApplicabilityError("the non-stationary formula needs a null or single-point trend");
  }
  const double p = m.p();
  const Exponents ex =
      exponents(p, m.alpha(), lp->beta, c > 0.0 ? std::optional<double>(gamma) : std::nullopt);
  const PowerSum f{ex.gamma_term ? (c / ghat) / p : 0.0, gamma, ex.beta_term ? lp->b : 0.0, lp->beta};
  const PointConstant pc =
      point_constant(ex, m.alpha(), m.a_at(lp->t0), f, m.t0_location == Location::Interior, lookup);
  AsymptoticResult r;
  fill(r, ex, pc);
  finish(r, m, u, m.trend.at(lp->t0));
  return r;
}

AsymptoticResult stationary_impl(const ProcessModel& m, double u, const Lookup& lookup) {
  require_unit_variance(m, "the stationary formula");
  if (!m.trend.is_null())
    throw ApplicabilityError("the stationary formula needs h = 0; use the trend-aware formulas");
  AsymptoticResult r;
  r.regime = Regime::StationaryIntegral;
  r.alpha_star = m.alpha() * m.p();
  r.beta_star = kInf;
  r.exponent = 2.0 / r.alpha_star;
  r.H_alpha = lookup(ConstantKey::pickands(m.alpha()));
  r.integral = a_integral(m, 0.0, m.T);
  r.constant = *r.H_alpha * *r.integral;
  finish(r, m, u, 0.0);
  return r;
}

AsymptoticResult single_max_impl(const ProcessModel& m, double u, const Lookup& lookup) {
  require_unit_variance(m, "the single-maximum formula");
  const auto* sp = std::get_if<SinglePoint>(&m.trend.maximizer);
  if (!sp || !(sp->c > 0.0))
    throw ApplicabilityError("the single-maximum formula needs a single trend maximizer with c > 0");
  const double p = m.p();
  const Exponents ex = exponents(p, m.alpha(), std::nullopt, sp->gamma);
  const PowerSum f{(sp->c / m.analysis.g_hat) / p, sp->gamma, 0.0, 1.0};
  const PointConstant pc =
      point_constant(ex, m.alpha(), m.a_at(sp->t0), f, m.t0_location == Location::Interior, lookup);
  AsymptoticResult r;
  fill(r, ex, pc);
  finish(r, m, u, m.trend.h_m);
  return r;
}

AsymptoticResult p_ge2_impl(const ProcessModel& m, double u, const Lookup& lookup) {
  require_unit_variance(m, "the p >= 2 formula");
  const double p = m.p();
  if (p < 2.0) throw ApplicabilityError("the weighted-integral formula needs p >= 2");
  AsymptoticResult r;
  r.regime = Regime::WeightedIntegral;
  r.alpha_star = m.alpha() * p;
  r.beta_star = kInf;
  r.exponent = 2.0 / r.alpha_star;
  r.H_alpha = lookup(ConstantKey::pickands(m.alpha()));
  const double ghat = m.analysis.g_hat;
  if (p == 2.0 && m.trend.h)
    r.integral = a_integral(m, 0.0, m.T, [&](double t) { return std::exp(0.5 * m.trend.h(t) / ghat); });
  else
    r.integral = a_integral(m, 0.0, m.T);
  r.constant = *r.H_alpha * *r.integral;
  finish(r, m, u, 0.0);
  return r;
}

AsymptoticResult multi_point_impl(const ProcessModel& m, double u, const Lookup& lookup) {
  require_unit_variance(m, "the multi-point formula");
  std::vector<SinglePoint> pts;
  if (const auto* ps = std::get_if<PointSet>(&m.trend.maximizer))
    pts = ps->points;
  else if (const auto* sp = std::get_if<SinglePoint>(&m.trend.maximizer))
    pts = {*sp};
  if (pts.empty()) throw ApplicabilityError("the multi-point formula needs trend maximizer points");
  const double p = m.p();
  std::vector<Exponents> ex;
  double top = -kInf;
  for (const auto& sp : pts) {
    if (!(sp.c > 0.0)) throw ApplicabilityError("every trend maximizer needs c > 0");
    ex.push_back(exponents(p, m.alpha(), std::nullopt, sp.gamma));
    top = std::max(top, u_power(ex.back()));
  }
  AsymptoticResult r;
  r.regime = Regime::MultiPoint;
  r.alpha_star = ex.front().alpha_star;
  r.beta_star = -kInf;
  r.constant = 0.0;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    if (u_power(ex[j]) < top - kTieTol) continue;
    const PowerSum f{(pts[j].c / m.analysis.g_hat) / p, pts[j].gamma, 0.0, 1.0};
    const PointConstant pc =
        point_constant(ex[j], m.alpha(), m.a_at(pts[j].t0), f, !on_boundary(m, pts[j].t0), lookup);
    r.constant += pc.C;
    r.beta_star = std::max(r.beta_star, ex[j].beta_star);
    if (pc.H) r.H_alpha = pc.H;
  }
  r.exponent = top;
  finish(r, m, u, m.trend.h_m);
  return r;
}

AsymptoticResult interval_impl(const ProcessModel& m, double u, const Lookup& lookup) {
  require_unit_variance(m, "the interval formula");
  const auto* iv = std::get_if<Interval>(&m.trend.maximizer);
  if (!iv) throw ApplicabilityError("the interval formula needs an interval trend maximizer");
  AsymptoticResult r;
  r.regime = Regime::IntervalMax;
  r.alpha_star = m.alpha() * m.p();
  r.beta_star = kInf;
  r.exponent = 2.0 / r.alpha_star;
  r.H_alpha = lookup(ConstantKey::pickands(m.alpha()));
  r.integral = a_integral(m, iv->A, iv->B);
  r.constant = *r.H_alpha * *r.integral;
  finish(r, m, u, m.trend.h_m);
  return r;
}

AsymptoticResult evaluate_impl(const ProcessModel& m, double u, const Lookup& lookup) {
  if (local_power(m)) return thm3_impl(m, u, lookup);
  if (m.trend.is_null()) return stationary_impl(m, u, lookup);
  if (m.p() >= 2.0) return p_ge2_impl(m, u, lookup);
  if (std::holds_alternative<Interval>(m.trend.maximizer)) return interval_impl(m, u, lookup);
  if (std::holds_alternative<SinglePoint>(m.trend.maximizer)) return single_max_impl(m, u, lookup);
  return multi_point_impl(m, u, lookup);
}

Lookup from_table(const constants::ConstantTable& table) {
  return [&table](const ConstantKey& k) { return table.require(k).value; };
}

template <class Impl>
AsymptoticResult checked(const ProcessModel& m, double u, const constants::ConstantTable& table,
                         Impl impl) {
  if (!std::isfinite(u)) throw DomainError("u must be finite");
  check_model(m);
  return impl(m, u, from_table(table));
}

}  // namespace

ProcessModel ProcessModel::build(homog::HomogeneousSpec g, gauss::CorrelationSpec corr,
                                 gauss::VarianceSpec var, TrendSpec trend, double T,
                                 Location t0_location) {
  ProcessModel m;
  m.analysis = homog::analyze_sphere(g);
  m.g = std::move(g);
  m.corr = std::move(corr);
  m.var = std::move(var);
  m.trend = std::move(trend);
  m.T = T;
  m.t0_location = t0_location;
  return m;
}

double ProcessModel::alpha() const {
  if (const auto* se = std::get_if<gauss::StationaryExp>(&corr)) return se->alpha;
  if (const auto* ls = std::get_if<gauss::LocallyStationary>(&corr)) return ls->alpha;
  throw ApplicabilityError("an explicit covariance matrix has no local exponent alpha");
}

double ProcessModel::a_at(double t) const {
  if (const auto* se = std::get_if<gauss::StationaryExp>(&corr)) return se->a;
  if (const auto* ls = std::get_if<gauss::LocallyStationary>(&corr)) return ls->a_fn(t);
  throw ApplicabilityError("an explicit covariance matrix has no local scale a(t)");
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Pickands: return "pickands";
    case Regime::Piterbarg: return "piterbarg";
    case Regime::Talagrand: return "talagrand";
    case Regime::StationaryIntegral: return "stationary_integral";
    case Regime::WeightedIntegral: return "weighted_integral";
    case Regime::MultiPoint: return "multi_point";
    case Regime::IntervalMax: return "interval_max";
  }
  return "unknown";
}

Exponents exponents(double p, double alpha, std::optional<double> beta,
                    std::optional<double> gamma) {
  if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("p must be positive");
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (0, 2]");
  if (gamma && !(*gamma > 0.0)) throw DomainError("gamma must be positive");
  Exponents ex;
  ex.alpha_star = alpha * p;
  if (beta) {
    if (!(*beta > 0.0)) throw DomainError("beta must be positive");
    const double bp = *beta * p;
    if (p < 2.0 && gamma) {
      const double gp = 2.0 * *gamma * p / (2.0 - p);
      ex.beta_star = std::min(bp, gp);
      ex.beta_term = same(bp, ex.beta_star);
      ex.gamma_term = same(gp, ex.beta_star);
    } else {
      ex.beta_star = bp;
      ex.beta_term = true;
    }
  } else {
    if (!gamma) throw PreconditionError("the single-maximum exponents need gamma");
    if (p >= 2.0)
      throw ApplicabilityError("beta* = 2 gamma p / (2 - p) is defined for p < 2 only; p >= 2 "
                               "uses the weighted-integral formula");
    ex.beta_star = 2.0 * *gamma * p / (2.0 - p);
    ex.gamma_term = true;
  }
  ex.regime = classify(ex.alpha_star, ex.beta_star);
  return ex;
}

double drift_integral(const DriftFunctionSpec& f) {
  if (constants::is_zero(f)) throw PreconditionError("int_0^inf exp(-f) diverges for f = 0");
  constants::validate(f);
  const auto& ps = std::get<PowerSum>(f);
  const bool one_term = ps.c_gamma == 0.0 || ps.b_beta == 0.0 || ps.gamma == ps.beta;
  if (one_term) {
    double k = 0.0, e = 0.0;
    if (ps.c_gamma != 0.0) {
      k += ps.c_gamma;
      e = ps.gamma;
    }
    if (ps.b_beta != 0.0) {
      k += ps.b_beta;
      e = ps.beta;
    }
    return std::tgamma(1.0 + 1.0 / e) * std::pow(k, -1.0 / e);
  }
  return num::integrate([&](double t) { return std::exp(-constants::eval_drift(f, t)); }, 0.0, kInf,
                        kQuadTol);
}

void check_model(const ProcessModel& m) {
  if (!(m.T > 0.0) || !std::isfinite(m.T)) throw ApplicabilityError("horizon T must be positive");
  if (m.p() != m.analysis.p || m.g.d() != m.analysis.d || !(m.analysis.g_hat > 0.0))
    throw ApplicabilityError("sphere analysis does not belong to g; build the model with ProcessModel::build");
  m.alpha();
  if (const auto* lp = local_power(m)) {
    if (lp->t0 < 0.0 || lp->t0 > m.T) throw ApplicabilityError("variance peak t0 must lie in [0, T]");
    if (!(lp->b > 0.0) || !(lp->beta > 0.0))
      throw ApplicabilityError("variance profile needs b > 0 and beta > 0");
  }
  if (m.trend.h) {
    const double tol = 1e-9 * (1.0 + std::abs(m.trend.h_m));
    for (int i = 0; i <= 1000; ++i) {
      const double t = m.T * i / 1000.0;
      if (m.trend.h(t) > m.trend.h_m + tol)
        throw ApplicabilityError("h(" + num::format_double(t) + ") exceeds the stated maximum h_m=" +
                                 num::format_double(m.trend.h_m));
    }
  }
  auto check_point = [&](const SinglePoint& sp) {
    if (sp.t0 < 0.0 || sp.t0 > m.T) throw ApplicabilityError("trend maximizer must lie in [0, T]");
    if (!(sp.c >= 0.0) || !(sp.gamma > 0.0))
      throw ApplicabilityError("trend maximizer needs c >= 0 and gamma > 0");
    check_fit(m, sp);
  };
  if (const auto* sp = std::get_if<SinglePoint>(&m.trend.maximizer)) check_point(*sp);
  if (const auto* ps = std::get_if<PointSet>(&m.trend.maximizer))
    for (const auto& sp : ps->points) check_point(sp);
  if (const auto* iv = std::get_if<Interval>(&m.trend.maximizer))
    if (!(0.0 <= iv->A && iv->A < iv->B && iv->B <= m.T))
      throw ApplicabilityError("trend interval needs 0 <= A < B <= T");
}

AsymptoticResult thm3_tail(const ProcessModel& m, double u, const constants::ConstantTable& table) {
  return checked(m, u, table, thm3_impl);
}
AsymptoticResult thm1_stationary_tail(const ProcessModel& m, double u,
                                      const constants::ConstantTable& table) {
  return checked(m, u, table, stationary_impl);
}
AsymptoticResult thm1_single_max_tail(const ProcessModel& m, double u,
                                      const constants::ConstantTable& table) {
  return checked(m, u, table, single_max_impl);
}
AsymptoticResult thm1_p_ge2_tail(const ProcessModel& m, double u,
                                 const constants::ConstantTable& table) {
  return checked(m, u, table, p_ge2_impl);
}
AsymptoticResult multi_point_tail(const ProcessModel& m, double u,
                                  const constants::ConstantTable& table) {
  return checked(m, u, table, multi_point_impl);
}
AsymptoticResult interval_max_tail(const ProcessModel& m, double u,
                                   const constants::ConstantTable& table) {
  return checked(m, u, table, interval_impl);
}
AsymptoticResult evaluate(const ProcessModel& m, double u, const constants::ConstantTable& table) {
  return checked(m, u, table, evaluate_impl);
}

std::vector<ConstantKey> required_constants(const ProcessModel& m) {
  check_model(m);
  std::vector<ConstantKey> keys;
  const Lookup record = [&](const ConstantKey& k) {
    const std::string s = k.to_string();
    if (std::none_of(keys.begin(), keys.end(), [&](const ConstantKey& x) { return x.to_string() == s; }))
      keys.push_back(k);
    return 1.0;
  };
  // Any u above the validity floor selects the same constants.
  const double floor = homog::validity_floor(m.analysis, m.p());
  const double shift = std::abs(m.trend.h_m) + (m.trend.h ? std::abs(m.trend.at(0.0)) : 0.0);
  evaluate_impl(m, 2.0 * floor + 2.0 * shift + 1.0, record);
  return keys;
}

}  // namespace chaosx::asympt
