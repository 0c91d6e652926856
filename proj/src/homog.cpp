#include "chaosx/homog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "chaosx/errors.hpp"
#include "chaosx/numerics.hpp"
#include "sphere_search.hpp"

namespace chaosx::homog {

namespace {

constexpr double kPoleSin = 1e-3;

void require_dims(int d) {
  if (d < 2) throw DomainError("homogeneous function needs dimension d >= 2");
  if (d > 24) throw DomainError("dimension d > 24 is not supported");
}


// Index of the unique largest entry of v (after applying `key`), or -1 on a tie.
template <class Key>
int unique_argmax(const Vec& x, Key key) {
  int best = 0;
  double best_v = key(x[0]);
  bool tie = false;
  for (int i = 1; i < x.size(); ++i) {
    const double v = key(x[i]);
    if (v > best_v) {
      best_v = v;
      best = i;
      tie = false;
    } else if (v == best_v) {
      tie = true;
    }
  }
  return tie ? -1 : best;
}

}  // namespace

double detail::sphere_area(int d) {
  return 2.0 * std::pow(num::kPi, 0.5 * d) / std::tgamma(0.5 * d);
}

// ---- spec -------------------------------------------------------------------

HomogeneousSpec HomogeneousSpec::lrho_norm(double rho, double p, int d) {
  require_dims(d);
  if (!(rho >= 1.0)) throw DomainError("L^rho norm needs rho >= 1");
  if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("homogeneity order p must be > 0");
  return HomogeneousSpec(LrhoNorm{rho}, p, d);
}

HomogeneousSpec HomogeneousSpec::product(int d) {
  require_dims(d);
  return HomogeneousSpec(Product{}, static_cast<double>(d), d);
}

HomogeneousSpec HomogeneousSpec::max(int d) {
  require_dims(d);
  return HomogeneousSpec(Max{}, 1.0, d);
}

HomogeneousSpec HomogeneousSpec::custom(std::function<double(std::span<const double>)> g,
                                        double p, int d, std::string name,
                                        std::optional<ManifoldChart> chart,
                                        std::uint64_t probe_seed) {
  require_dims(d);
  if (!g) throw DomainError("custom homogeneous function has no evaluator");
  if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("homogeneity order p must be > 0");
  if (chart) {
    if (chart->m < 1 || chart->m > d - 2 ||
        static_cast<int>(chart->box.size()) != chart->m || !chart->map)
      throw DomainError("manifold chart must have 1 <= m <= d-2 and an m-dimensional box");
  }
  HomogeneousSpec spec(Custom{std::move(g), std::move(name), std::move(chart)}, p, d);

  num::NormalSource normal(probe_seed);
  std::uniform_real_distribution<double> logc(std::log(0.1), std::log(10.0));
  bool positive = false;
  Vec x(d);
  for (int k = 0; k < 200; ++k) {
    normal.fill(x.data(), static_cast<std::size_t>(d));
    const double c = std::exp(logc(normal.engine()));
    const double gx = eval_g(spec, x);
    const double gcx = eval_g(spec, Vec(c * x));
    const double target = std::pow(c, p) * gx;
    if (std::abs(gcx - target) > 1e-9 * (1.0 + std::abs(target))) {
      std::ostringstream msg;
      msg << "custom function '" << std::get<Custom>(spec.kind_).name
          << "' is not homogeneous of order " << p << " (g(cx)=" << gcx
          << ", c^p g(x)=" << target << ")";
      throw DomainError(msg.str());
    }
    if (gx > 0.0) positive = true;
  }
  if (!positive)
    throw DomainError("custom function is not positive anywhere on the probe set");
  return spec;
}

HomogeneousSpec HomogeneousSpec::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor))
    throw DomainError("scale factor must be positive and finite");
  HomogeneousSpec out = *this;
  out.scale_ *= factor;
  return out;
}

std::string HomogeneousSpec::describe() const {
  std::ostringstream os;
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, LrhoNorm>)
          os << "lrho(rho=" << num::format_double(k.rho) << ",p=" << num::format_double(p_)
             << ")";
        else if constexpr (std::is_same_v<K, Product>)
          os << "product";
        else if constexpr (std::is_same_v<K, Max>)
          os << "max";
        else
          os << k.name << "(p=" << num::format_double(p_) << ")";
      },
      kind_);
  os << ",d=" << d_;
  if (scale_ != 1.0) os << ",scale=" << num::format_double(scale_);
  return os.str();
}

// ---- evaluation -------------------------------------------------------------

double eval_g(const HomogeneousSpec& spec, std::span<const double> x) {
  if (static_cast<int>(x.size()) != spec.d())
    throw PreconditionError("eval_g: vector length does not match dimension");
  for (double v : x)
    if (!std::isfinite(v)) throw DomainError("eval_g: non-finite input");

  const double base = std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, LrhoNorm>) {
          if (std::isinf(k.rho)) {
            double m = 0.0;
            for (double v : x) m = std::max(m, std::abs(v));
            return std::pow(m, spec.p());
          }
          if (k.rho == 2.0) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return spec.p() == 2.0 ? s : std::pow(s, 0.5 * spec.p());
          }
          double s = 0.0;
          for (double v : x) s += std::pow(std::abs(v), k.rho);
          return std::pow(s, spec.p() / k.rho);
        } else if constexpr (std::is_same_v<K, Product>) {
          double prod = 1.0;
          for (double v : x) prod *= v;
          return prod;
        } else if constexpr (std::is_same_v<K, Max>) {
          return *std::max_element(x.begin(), x.end());
        } else {
          return k.evaluator(x);
        }
      },
      spec.kind());
  return spec.scale() * base;
}

bool cartesian_derivatives(const HomogeneousSpec& spec, const Vec& x, Vec& grad,
                           Mat& hess) {
  const int d = spec.d();
  const double s = spec.scale();
  grad = Vec::Zero(d);
  hess = Mat::Zero(d, d);
  if (const auto* k = std::get_if<LrhoNorm>(&spec.kind())) {
    const double p = spec.p();
    if (std::isinf(k->rho)) {
      const int i = unique_argmax(x, [](double v) { return std::abs(v); });
      if (i < 0 || x[i] == 0.0) return false;
      const double a = std::abs(x[i]);
      const double sg = x[i] > 0 ? 1.0 : -1.0;
      grad[i] = s * p * std::pow(a, p - 1.0) * sg;
      hess(i, i) = s * p * (p - 1.0) * std::pow(a, p - 2.0);
      return true;
    }
    const double rho = k->rho;
    double G = 0.0;
    Vec dG(d), d2G(d);
    for (int i = 0; i < d; ++i) {
      const double a = std::abs(x[i]);
      if (a == 0.0 && rho < 2.0) return false;
      const double sg = x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0);
      G += std::pow(a, rho);
      dG[i] = rho * std::pow(a, rho - 1.0) * sg;
      d2G[i] = rho == 2.0 ? 2.0 : rho * (rho - 1.0) * (a == 0.0 ? 0.0 : std::pow(a, rho - 2.0));
    }
    if (G <= 0.0) return false;
    const double q = p / rho;
    const double gq1 = std::pow(G, q - 1.0);
    const double gq2 = std::pow(G, q - 2.0);
    grad = s * q * gq1 * dG;
    hess = s * q * (q - 1.0) * gq2 * (dG * dG.transpose());
    hess.diagonal() += s * q * gq1 * d2G;
    return true;
  }
  if (std::holds_alternative<Product>(spec.kind())) {
    for (int i = 0; i < d; ++i) {
      double gi = 1.0;
      for (int j = 0; j < d; ++j)
        if (j != i) gi *= x[j];
      grad[i] = s * gi;
      for (int j = i + 1; j < d; ++j) {
        double hij = 1.0;
        for (int l = 0; l < d; ++l)
          if (l != i && l != j) hij *= x[l];
        hess(i, j) = hess(j, i) = s * hij;
      }
    }
    return true;
  }
  if (std::holds_alternative<Max>(spec.kind())) {
    const int i = unique_argmax(x, [](double v) { return v; });
    if (i < 0) return false;
    grad[i] = s;
    return true;
  }
  return false;
}

// ---- spherical chart --------------------------------------------------------

namespace {

// Factor kind of x_i with respect to angle j: 0 -> 1, 1 -> sin, 2 -> cos.
int factor_kind(int i, int j, int d) {
  if (i == d - 1) return j <= d - 2 ? 1 : 0;
  if (j < i) return 1;
  if (j == i) return 2;
  return 0;
}

double factor_value(int kind, double phi, int order) {
  if (kind == 0) return order == 0 ? 1.0 : 0.0;
  const double s = std::sin(phi), c = std::cos(phi);
  if (kind == 1) {
    switch (order) {
      case 0: return s;
      case 1: return c;
      default: return -s;
    }
  }
  switch (order) {
    case 0: return c;
    case 1: return -s;
    default: return -c;
  }
}

struct ChartJet {
  Vec x;                 // d
  Mat dx;                // d x (d-1)
  std::vector<Mat> d2x;  // (d-1) of d x (d-1): d2x[k].col(l) = d^2 x / dphi_k dphi_l
};

ChartJet chart_jet(const Vec& phi) {
  const int n = static_cast<int>(phi.size());
  const int d = n + 1;
  ChartJet jet;
  jet.x = Vec(d);
  jet.dx = Mat(d, n);
  jet.d2x.assign(n, Mat(d, n));
  std::vector<int> order(n, 0);
  auto product = [&](int i) {
    double v = 1.0;
    for (int j = 0; j < n; ++j) v *= factor_value(factor_kind(i, j, d), phi[j], order[j]);
    return v;
  };
  for (int i = 0; i < d; ++i) {
    std::fill(order.begin(), order.end(), 0);
    jet.x[i] = product(i);
    for (int k = 0; k < n; ++k) {
      std::fill(order.begin(), order.end(), 0);
      order[k] = 1;
      jet.dx(i, k) = product(i);
      for (int l = 0; l < n; ++l) {
        std::fill(order.begin(), order.end(), 0);
        order[k] += 1;
        order[l] += 1;
        jet.d2x[k](i, l) = product(i);
      }
    }
  }
  return jet;
}

double eval_on_chart(const HomogeneousSpec& spec, const Chart& chart, const Vec& phi) {
  const Vec e = chart.rotation * sphere_point(phi);
  return eval_g(spec, e);
}

void check_pole(const Vec& phi) {
  if (chart_pole_distance(phi) < kPoleSin)
    throw ChartError("spherical chart is singular near this point (sin(phi_i) < 1e-3); "
                     "use a rotated chart");
}

}  // namespace

Vec sphere_point(const Vec& phi) { return chart_jet(phi).x; }

Vec angles_of(const Vec& e) {
  const int d = static_cast<int>(e.size());
  Vec phi(d - 1);
  for (int i = 0; i < d - 2; ++i) {
    const double tail = e.tail(d - i).norm();
    phi[i] = tail > 0.0 ? std::acos(std::clamp(e[i] / tail, -1.0, 1.0)) : 0.0;
  }
  double last = std::atan2(e[d - 1], e[d - 2]);
  if (last < 0.0) last += 2.0 * num::kPi;
  phi[d - 2] = last;
  return phi;
}

double chart_jacobian(const Vec& phi) {
  const int n = static_cast<int>(phi.size());
  double j = 1.0;
  for (int i = 0; i < n - 1; ++i) j *= std::pow(std::sin(phi[i]), n - 1 - i);
  return j;
}

double chart_pole_distance(const Vec& phi) {
  double m = 1.0;
  for (int i = 0; i + 1 < phi.size(); ++i) m = std::min(m, std::abs(std::sin(phi[i])));
  return m;
}

Chart natural_chart(int d) { return Chart{Mat::Identity(d, d), false}; }

Vec chart_reference_angles(int d) {
  Vec phi = Vec::Constant(d - 1, num::kPi / 2.0);
  phi[d - 2] = num::kPi / 4.0;
  return phi;
}

Chart rotated_chart_for(const Vec& e) {
  const int d = static_cast<int>(e.size());
  const Vec ref = sphere_point(chart_reference_angles(d));
  const Vec v = ref - e;
  Chart c{Mat::Identity(d, d), true};
  const double vv = v.squaredNorm();
  if (vv > 1e-30) c.rotation -= 2.0 * v * v.transpose() / vv;
  return c;
}

Mat chart_hessian(const HomogeneousSpec& spec, const Chart& chart, const Vec& phi) {
  const ChartJet jet = chart_jet(phi);
  const int n = static_cast<int>(phi.size());
  const Vec x = chart.rotation * jet.x;
  Vec grad;
  Mat hess;
  if (!cartesian_derivatives(spec, x, grad, hess))
    throw DomainError("closed-form Hessian unavailable at this point (custom g or "
                      "non-differentiable point)");
  const Mat D = chart.rotation * jet.dx;
  Mat H = D.transpose() * hess * D;
  for (int k = 0; k < n; ++k) {
    const Mat D2 = chart.rotation * jet.d2x[k];
    H.row(k) += (grad.transpose() * D2);
  }
  return 0.5 * (H + H.transpose());
}

Mat chart_hessian_fd(const HomogeneousSpec& spec, const Chart& chart, const Vec& phi,
                     double step) {
  const int n = static_cast<int>(phi.size());
  Mat H(n, n);
  const double f0 = eval_on_chart(spec, chart, phi);
  for (int i = 0; i < n; ++i) {
    Vec pp = phi, pm = phi;
    pp[i] += step;
    pm[i] -= step;
    H(i, i) = (eval_on_chart(spec, chart, pp) - 2.0 * f0 + eval_on_chart(spec, chart, pm)) /
              (step * step);
    for (int j = i + 1; j < n; ++j) {
      Vec a = phi, b = phi, c = phi, e = phi;
      a[i] += step; a[j] += step;
      b[i] += step; b[j] -= step;
      c[i] -= step; c[j] += step;
      e[i] -= step; e[j] -= step;
      H(i, j) = H(j, i) = (eval_on_chart(spec, chart, a) - eval_on_chart(spec, chart, b) -
                           eval_on_chart(spec, chart, c) + eval_on_chart(spec, chart, e)) /
                          (4.0 * step * step);
    }
  }
  return H;
}

double hessian_det(const HomogeneousSpec& spec, const Vec& phi) {
  if (phi.size() != spec.d() - 1)
    throw PreconditionError("hessian_det: expected d-1 angles");
  check_pole(phi);
  const Chart chart = natural_chart(spec.d());
  const Mat H = spec.is_builtin() ? chart_hessian(spec, chart, phi)
                                  : chart_hessian_fd(spec, chart, phi);
  return std::abs(H.determinant());
}

double hessian_det_fd(const HomogeneousSpec& spec, const Vec& phi, double step) {
  if (phi.size() != spec.d() - 1)
    throw PreconditionError("hessian_det_fd: expected d-1 angles");
  check_pole(phi);
  return std::abs(chart_hessian_fd(spec, natural_chart(spec.d()), phi, step).determinant());
}

// ---- tangent-space derivatives ------------------------------------------------

Mat tangent_basis(const Vec& e) {
  const int d = static_cast<int>(e.size());
  Eigen::HouseholderQR<Mat> qr(e);
  const Mat Q = qr.householderQ() * Mat::Identity(d, d);
  return Q.rightCols(d - 1);
}

namespace {

double eval_tangent(const HomogeneousSpec& spec, const Vec& e, const Mat& T, const Vec& v) {
  Vec y = e + T * v;
  y /= y.norm();
  return eval_g(spec, y);
}

}  // namespace

Mat tangent_hessian(const HomogeneousSpec& spec, const Vec& e, double fd_step) {
  const int n = spec.d() - 1;
  const Mat T = tangent_basis(e);
  if (spec.is_builtin()) {
    Vec grad;
    Mat hess;
    if (cartesian_derivatives(spec, e, grad, hess)) {
      Mat H = T.transpose() * hess * T;
      H.diagonal().array() -= grad.dot(e);
      return 0.5 * (H + H.transpose());
    }
  }
  const double h = fd_step;
  Mat H(n, n);
  const Vec zero = Vec::Zero(n);
  const double f0 = eval_tangent(spec, e, T, zero);
  for (int i = 0; i < n; ++i) {
    Vec vp = zero, vm = zero;
    vp[i] = h;
    vm[i] = -h;
    H(i, i) = (eval_tangent(spec, e, T, vp) - 2.0 * f0 + eval_tangent(spec, e, T, vm)) / (h * h);
    for (int j = i + 1; j < n; ++j) {
      Vec a = zero, b = zero, c = zero, dd = zero;
      a[i] = h; a[j] = h;
      b[i] = h; b[j] = -h;
      c[i] = -h; c[j] = h;
      dd[i] = -h; dd[j] = -h;
      H(i, j) = H(j, i) = (eval_tangent(spec, e, T, a) - eval_tangent(spec, e, T, b) -
                           eval_tangent(spec, e, T, c) + eval_tangent(spec, e, T, dd)) /
                          (4.0 * h * h);
    }
  }
  return H;
}

Vec tangent_gradient(const HomogeneousSpec& spec, const Vec& e, double fd_step) {
  const int n = spec.d() - 1;
  const Mat T = tangent_basis(e);
  if (spec.is_builtin()) {
    Vec grad;
    Mat hess;
    if (cartesian_derivatives(spec, e, grad, hess)) return T.transpose() * grad;
  }
  Vec g(n);
  const Vec zero = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    Vec vp = zero, vm = zero;
    vp[i] = fd_step;
    vm[i] = -fd_step;
    g[i] = (eval_tangent(spec, e, T, vp) - eval_tangent(spec, e, T, vm)) / (2.0 * fd_step);
  }
  return g;
}

// ---- closed-form sphere analysis for built-ins ---------------------------------

namespace {

}  // namespace

Maximizer detail::describe_point(const HomogeneousSpec& spec, const Vec& e, bool closed_form) {
  Maximizer mx;
  mx.point = e;
  Vec phi = angles_of(e);
  Chart chart = natural_chart(spec.d());
  if (chart_pole_distance(phi) < kPoleSin) {
    chart = rotated_chart_for(e);
    phi = chart_reference_angles(spec.d());
  }
  mx.phi = phi;
  mx.rotated_chart = chart.rotated;
  mx.jacobian = chart_jacobian(phi);
  const Mat H = closed_form ? chart_hessian(spec, chart, phi) : chart_hessian_fd(spec, chart, phi);
  mx.hessian_det = std::abs(H.determinant());
  mx.hessian_rank = spec.d() - 1;
  return mx;
}

namespace {

SphereAnalysis point_set(const HomogeneousSpec& spec, double g_hat,
                         const std::vector<Vec>& points) {
  SphereAnalysis a;
  a.d = spec.d();
  a.p = spec.p();
  a.g_hat = g_hat;
  a.kind = MaximizerKind::PointSet;
  a.m = 0;
  for (const Vec& e : points) a.maximizers.push_back(detail::describe_point(spec, e, true));
  return a;
}

std::vector<Vec> sign_vectors(int d, bool even_negatives_only) {
  std::vector<Vec> out;
  const double c = 1.0 / std::sqrt(static_cast<double>(d));
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    int neg = 0;
    Vec v(d);
    for (int i = 0; i < d; ++i) {
      const bool is_neg = (mask >> i) & 1u;
      neg += is_neg;
      v[i] = is_neg ? -c : c;
    }
    if (even_negatives_only && (neg % 2) != 0) continue;
    out.push_back(v);
  }
  return out;
}

SphereAnalysis analyze_builtin(const HomogeneousSpec& spec) {
  const int d = spec.d();
  const double s = spec.scale();
  if (std::holds_alternative<Product>(spec.kind())) {
    const double g_hat = s * std::pow(static_cast<double>(d), -0.5 * d);
    return point_set(spec, g_hat, sign_vectors(d, true));
  }
  if (std::holds_alternative<Max>(spec.kind())) {
    std::vector<Vec> pts;
    for (int i = 0; i < d; ++i) pts.push_back(Vec::Unit(d, i));
    return point_set(spec, s, pts);
  }
  const auto& k = std::get<LrhoNorm>(spec.kind());
  const double p = spec.p();
  if (k.rho == 2.0) {
    SphereAnalysis a;
    a.d = d;
    a.p = p;
    a.g_hat = s;
    a.kind = MaximizerKind::Manifold;
    a.m = d - 1;
    a.parametrization = "whole unit sphere S^" + std::to_string(d - 1);
    for (int i = 0; i < d; ++i) {
      Maximizer mx;
      mx.point = Vec::Unit(d, i);
      mx.phi = angles_of(mx.point);
      mx.jacobian = chart_jacobian(mx.phi);
      mx.hessian_det = 1.0;  // empty (0 x 0) nonsingular block
      mx.hessian_rank = 0;
      a.maximizers.push_back(mx);
    }
    a.manifold_integral = detail::sphere_area(d);
    return a;
  }
  if (k.rho < 2.0) {
    const double g_hat = s * std::pow(static_cast<double>(d), p * (1.0 / k.rho - 0.5));
    return point_set(spec, g_hat, sign_vectors(d, false));
  }
  std::vector<Vec> pts;
  for (int i = 0; i < d; ++i) {
    pts.push_back(Vec::Unit(d, i));
    pts.push_back(-Vec::Unit(d, i));
  }
  return point_set(spec, s, pts);
}

}  // namespace

SphereAnalysis analyze_sphere(const HomogeneousSpec& spec, const AnalysisOptions& opts) {
  SphereAnalysis a = spec.is_builtin() && !opts.force_numeric ? analyze_builtin(spec)
                                                              : detail::analyze_numeric(spec, opts);
  if (a.kind == MaximizerKind::PointSet) {
    if (a.maximizers.empty()) throw ConditionViolation("no maximizer found on the sphere");
    for (const auto& mx : a.maximizers)
      if (!(mx.hessian_det > opts.det_tol))
        throw ConditionViolation("isolated maximizer with |det g''| below tolerance; "
                                 "smoothness/rank condition fails (case i)");
  }
  a.h0 = h0(a, spec.p());
  return a;
}

double h0(const SphereAnalysis& a, double p) {
  if (a.maximizers.empty() && a.kind == MaximizerKind::PointSet)
    throw ConditionViolation("h0: empty maximizer set");
  if (!(p > 0.0)) throw DomainError("h0: p must be > 0");
  const double pg = p * a.g_hat;
  if (a.kind == MaximizerKind::PointSet) {
    double sum = 0.0;
    for (const auto& mx : a.maximizers) sum += mx.jacobian / std::sqrt(mx.hessian_det);
    return std::pow(2.0 * num::kPi, -0.5) * std::pow(pg, 0.5 * (a.d - 1)) * sum;
  }
  if (!(a.manifold_integral > 0.0)) throw ConditionViolation("h0: empty maximizer manifold");
  return std::pow(2.0 * num::kPi, -0.5 * (a.m + 1)) * std::pow(pg, 0.5 * (a.d - 1 - a.m)) *
         a.manifold_integral;
}

double validity_floor(const SphereAnalysis& a, double p) {
  return std::pow(2.0, p) * a.g_hat;
}

namespace {

void check_floor(const SphereAnalysis& a, double p, double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite x");
  const double floor = validity_floor(a, p);
  if (!(x >= floor)) {
    std::ostringstream msg;
    msg << what << ": x=" << x << " is below the validity floor " << floor
        << " (x^{2/p} >= 4 g_hat^{2/p}); use Monte Carlo instead";
    throw RangeError(msg.str());
  }
}

}  // namespace

double tail_asympt(const SphereAnalysis& a, double p, double x) {
  check_floor(a, p, x, "tail_asympt");
  const double r = x / a.g_hat;
  return a.h0 * std::pow(r, (a.m - 1) / p) * std::exp(-0.5 * std::pow(r, 2.0 / p));
}

double pdf_asympt(const SphereAnalysis& a, double p, double x) {
  check_floor(a, p, x, "pdf_asympt");
  const double r = x / a.g_hat;
  return a.h0 / (p * a.g_hat) * std::pow(r, (a.m + 1) / p - 1.0) *
         std::exp(-0.5 * std::pow(r, 2.0 / p));
}

}  // namespace chaosx::homog
