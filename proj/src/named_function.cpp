#include "chaosx/named_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chaosx/errors.hpp"
#include "chaosx/numerics.hpp"

namespace chaosx {

namespace {

void finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}

}  // namespace

double eval(const NamedFunction& f, double t) {
  if (const auto* c = std::get_if<ConstFn>(&f)) return c->v;
  if (const auto* l = std::get_if<LinearFn>(&f)) return l->v0 + l->v1 * t;
  if (const auto* p = std::get_if<PowerPeakFn>(&f))
    return p->h_m - p->c * std::pow(std::abs(t - p->t0), p->gamma);
  const auto& k = std::get<TableFn>(f).knots;
  if (t <= k.front().first) return k.front().second;
  if (t >= k.back().first) return k.back().second;
  const auto it = std::upper_bound(k.begin(), k.end(), t,
                                   [](double x, const auto& kn) { return x < kn.first; });
  const auto& [t1, v1] = *it;
  const auto& [t0, v0] = *(it - 1);
  return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
}

std::function<double(double)> to_function(const NamedFunction& f) {
  return [f](double t) { return eval(f, t); };
}

FunctionMax maximize(const NamedFunction& f, double lo, double hi) {
  FunctionMax m;
  auto interval = [&](double a, double b) {
    m.value = eval(f, a);
    m.on_interval = true;
    m.A = a;
    m.B = b;
    m.argmax = {a, b};
  };
  auto point = [&](double t) {
    m.value = eval(f, t);
    m.argmax = {t};
  };
  if (std::holds_alternative<ConstFn>(f)) {
    interval(lo, hi);
  } else if (const auto* l = std::get_if<LinearFn>(&f)) {
    if (l->v1 == 0.0)
      interval(lo, hi);
    else
      point(l->v1 > 0.0 ? hi : lo);
  } else if (const auto* p = std::get_if<PowerPeakFn>(&f)) {
    if (p->c == 0.0)
      interval(lo, hi);
    else
      point(std::clamp(p->t0, lo, hi));
  } else {
    std::vector<double> ts{lo};
    for (const auto& kn : std::get<TableFn>(f).knots)
      if (kn.first > lo && kn.first < hi) ts.push_back(kn.first);
    ts.push_back(hi);
    double best = -std::numeric_limits<double>::infinity();
    for (double t : ts) best = std::max(best, eval(f, t));
    const double tol = 1e-12 * std::max(1.0, std::abs(best));
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (eval(f, ts[i]) < best - tol) continue;
      if (i + 1 < ts.size() && eval(f, ts[i + 1]) >= best - tol) {
        std::size_t j = i + 1;
        while (j + 1 < ts.size() && eval(f, ts[j + 1]) >= best - tol) ++j;
        interval(ts[i], ts[j]);
        m.value = best;
        return m;
      }
      m.argmax.push_back(ts[i]);
    }
    m.value = best;
  }
  return m;
}

std::string describe(const NamedFunction& f) {
  using num::format_double;
  if (const auto* c = std::get_if<ConstFn>(&f)) return "const(" + format_double(c->v) + ")";
  if (const auto* l = std::get_if<LinearFn>(&f))
    return "linear(" + format_double(l->v0) + "," + format_double(l->v1) + ")";
  if (const auto* p = std::get_if<PowerPeakFn>(&f))
    return "power_peak(" + format_double(p->h_m) + "," + format_double(p->c) + "," +
           format_double(p->t0) + "," + format_double(p->gamma) + ")";
  std::string out = "table(";
  bool first = true;
  for (const auto& [t, v] : std::get<TableFn>(f).knots) {
    if (!first) out += ";";
    first = false;
    out += format_double(t) + ":" + format_double(v);
  }
  return out + ")";
}

void validate(const NamedFunction& f) {
  if (const auto* c = std::get_if<ConstFn>(&f)) {
    finite(c->v, "const value");
  } else if (const auto* l = std::get_if<LinearFn>(&f)) {
    finite(l->v0, "linear v0");
    finite(l->v1, "linear v1");
  } else if (const auto* p = std::get_if<PowerPeakFn>(&f)) {
    finite(p->h_m, "power_peak h_m");
    finite(p->t0, "power_peak t0");
    if (!(p->c >= 0.0) || !std::isfinite(p->c)) throw DomainError("power_peak c must be >= 0");
    if (!(p->gamma > 0.0) || !std::isfinite(p->gamma)) throw DomainError("power_peak gamma must be > 0");
  } else {
    const auto& k = std::get<TableFn>(f).knots;
    if (k.empty()) throw DomainError("table needs at least one knot");
    for (std::size_t i = 0; i < k.size(); ++i) {
      finite(k[i].first, "table t");
      finite(k[i].second, "table value");
      if (i > 0 && !(k[i].first > k[i - 1].first))
        throw DomainError("table knots must be strictly increasing in t");
    }
  }
}

}  // namespace chaosx
