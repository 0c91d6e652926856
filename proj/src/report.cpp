#include "chaosx/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chaosx/numerics.hpp"

namespace chaosx::report {

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return num::format_double(v);
}

std::string number(const std::optional<double>& v) { return v ? number(*v) : std::string(); }

std::string constants_row(const constants::ConstantKey& key, const constants::ConstantEstimate& e) {
  const bool pit = key.kind == constants::ConstantKind::Piterbarg;
  std::ostringstream os;
  os << number(key.alpha) << ',' << (pit ? number(key.a) : "") << ','
     << (pit ? constants::describe(key.f) : "") << ','
     << (pit ? constants::to_string(key.domain) : "") << ',' << number(e.S) << ','
     << number(e.delta) << ',' << e.n_rep << ',' << number(e.value) << ',' << number(e.std_error)
     << ',' << (e.extrapolated ? "true" : "false");
  return os.str();
}

std::string asymptotic_row(const asympt::AsymptoticResult& r) {
  std::ostringstream os;
  os << number(r.u) << ',' << number(r.value) << ',' << asympt::to_string(r.regime) << ','
     << number(r.alpha_star) << ',' << number(r.beta_star) << ',' << number(r.H_alpha) << ','
     << number(r.P_const) << ',' << number(r.integral) << ',' << number(r.h0);
  return os.str();
}

std::string validate_row(const mc::ComparisonRow& r) {
  const bool has_asympt = std::isfinite(r.asympt_value);
  std::ostringstream os;
  os << number(r.u) << ',' << number(r.mc.p_hat) << ',' << number(r.mc.ci_low) << ','
     << number(r.mc.ci_high) << ',' << r.mc.n << ',' << r.mc.hits << ',' << number(r.mc.grid_step)
     << ',' << number(r.asympt_value) << ',' << number(r.ratio) << ','
     << (has_asympt ? asympt::to_string(r.regime) : "") << ',' << r.mc.seed;
  return os.str();
}

std::string tail_row(double x, std::optional<double> tail, std::optional<double> pdf) {
  std::ostringstream os;
  os << number(x) << ',' << number(tail) << ',' << number(pdf) << ','
     << (tail ? "ok" : "invalid");
  return os.str();
}

namespace {

struct Point {
  double u, r, lo, hi;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string ratio_svg(const std::vector<mc::ComparisonRow>& rows, bool log_y) {
  const double W = 640, H = 420, left = 70, right = 20, top = 40, bottom = 50;
  std::vector<Point> pts;
  for (const auto& r : rows) {
    if (!(r.asympt_value > 0.0) || !std::isfinite(r.asympt_value)) continue;
    Point p{r.u, r.ratio, r.mc.ci_low / r.asympt_value, r.mc.ci_high / r.asympt_value};
    if (log_y && !(p.r > 0.0)) continue;
    pts.push_back(p);
  }

  double umin = 0, umax = 1, ymin = 0, ymax = 2;
  if (!pts.empty()) {
    umin = umax = pts.front().u;
    ymin = ymax = 1.0;
    for (const auto& p : pts) {
      umin = std::min(umin, p.u);
      umax = std::max(umax, p.u);
      ymax = std::max(ymax, p.hi);
      ymin = std::min(ymin, log_y ? std::max(p.lo, p.r * 1e-3) : p.lo);
    }
  }
  if (umax - umin <= 0.0) {
    umin -= 1.0;
    umax += 1.0;
  }
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  double y0 = ty(log_y ? std::max(ymin, 1e-300) : std::min(ymin, 0.0));
  double y1 = ty(ymax);
  const double pad = 0.05 * (y1 - y0 > 0 ? y1 - y0 : 1.0);
  y0 -= pad;
  y1 += pad;
  const double du = 0.05 * (umax - umin);
  umin -= du;
  umax += du;

  auto X = [&](double u) { return left + (u - umin) / (umax - umin) * (W - left - right); };
  auto Y = [&](double v) {
    const double t = std::clamp(ty(v), y0, y1);
    return H - bottom - (t - y0) / (y1 - y0) * (H - top - bottom);
  };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"15\">Monte Carlo / asymptotic ratio</text>\n";
  // Axes.
  s << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\""
    << H - bottom << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double u = umin + (umax - umin) * i / 5.0;
    s << "<text x=\"" << fmt(X(u)) << "\" y=\"" << H - bottom + 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(u)
      << "</text>\n";
    const double t = y0 + (y1 - y0) * i / 5.0;
    const double v = log_y ? std::pow(10.0, t) : t;
    s << "<text x=\"" << left - 6 << "\" y=\"" << fmt(Y(v) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v)
      << "</text>\n";
  }
  s << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 10
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">u</text>\n"
    << "<text x=\"16\" y=\"" << (top + H - bottom) / 2 << "\" transform=\"rotate(-90 16 "
    << (top + H - bottom) / 2
    << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">ratio"
    << (log_y ? " (log scale)" : "") << "</text>\n";
  // Reference line y = 1.
  s << "<line x1=\"" << left << "\" y1=\"" << fmt(Y(1.0)) << "\" x2=\"" << W - right << "\" y2=\""
    << fmt(Y(1.0)) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
  for (const auto& p : pts) {
    const double x = X(p.u);
    s << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(Y(std::max(p.lo, log_y ? 1e-300 : p.lo)))
      << "\" x2=\"" << fmt(x) << "\" y2=\"" << fmt(Y(p.hi)) << "\" stroke=\"steelblue\"/>\n"
      << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(Y(p.r))
      << "\" r=\"4\" fill=\"steelblue\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace chaosx::report
