#include "sphere_search.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "chaosx/errors.hpp"
#include "chaosx/numerics.hpp"

namespace chaosx::homog::detail {

namespace {

Vec normalized(const Vec& v) { return v / v.norm(); }

double arc_distance(const Vec& a, const Vec& b) {
  return 2.0 * std::asin(std::min(1.0, 0.5 * (a - b).norm()));
}

struct LocalMax {
  Vec point;
  double value;
};

// Newton ascent on the sphere in tangent coordinates; directions with
// non-negative curvature fall back to a scaled gradient step.
LocalMax local_max(const HomogeneousSpec& spec, Vec e) {
  double f = eval_g(spec, e);
  for (int it = 0; it < 300; ++it) {
    const Mat T = tangent_basis(e);
    const Vec grad = tangent_gradient(spec, e);
    const Mat H = tangent_hessian(spec, e);
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    const Vec& lam = es.eigenvalues();
    const double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-12);
    const Vec c = es.eigenvectors().transpose() * grad;
    Vec s(c.size());
    for (int i = 0; i < c.size(); ++i) {
      if (lam[i] < -1e-6 * scale)
        s[i] = -c[i] / lam[i];
      else
        s[i] = c[i] / std::max(scale, 1e-3);
    }
    Vec step = es.eigenvectors() * s;
    const double len = step.norm();
    if (len > 0.5) step *= 0.5 / len;

    bool accepted = false;
    Vec cand;
    double fc = f;
    double t = 1.0;
    for (int k = 0; k < 60; ++k) {
      cand = normalized(e + T * (t * step));
      fc = eval_g(spec, cand);
      if (fc >= f - 1e-15 * (1.0 + std::abs(f))) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    const double moved = (cand - e).norm();
    e = cand;
    f = fc;
    if (moved < 1e-13) break;
  }
  return {e, f};
}

// `scale` is the natural size of the Hessian (p * g_hat); eigenvalues that are
// small relative to both it and the largest one count as zero.
int numeric_rank(const Mat& H, double rank_tol, double scale) {
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  const Vec a = es.eigenvalues().cwiseAbs();
  const double top = std::max(a.size() ? a.maxCoeff() : 0.0, scale);
  if (top == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < a.size(); ++i)
    if (a[i] > rank_tol * top) ++r;
  return r;
}

// Product of the `rank` largest |eigenvalues|.
double pseudo_det(const Mat& H, int rank) {
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  std::vector<double> a(static_cast<std::size_t>(es.eigenvalues().size()));
  for (int i = 0; i < es.eigenvalues().size(); ++i) a[i] = std::abs(es.eigenvalues()[i]);
  std::sort(a.begin(), a.end(), std::greater<>());
  double prod = 1.0;
  for (int i = 0; i < rank; ++i) prod *= a[static_cast<std::size_t>(i)];
  return prod;
}

double manifold_weight(const HomogeneousSpec& spec, const Vec& e, int rank) {
  return 1.0 / std::sqrt(pseudo_det(tangent_hessian(spec, e), rank));
}

// Unit tangent of a maximizer curve at e, oriented along `prev`.
Vec null_direction(const HomogeneousSpec& spec, const Vec& e, const Vec& prev) {
  const Mat T = tangent_basis(e);
  Eigen::SelfAdjointEigenSolver<Mat> es(tangent_hessian(spec, e));
  int idx = 0;
  const Vec a = es.eigenvalues().cwiseAbs();
  a.minCoeff(&idx);
  Vec v = T * es.eigenvectors().col(idx);
  v -= v.dot(e) * e;
  v.normalize();
  if (prev.size() == v.size() && v.dot(prev) < 0.0) v = -v;
  return v;
}

// Newton steps restricted to the curved (non-null) directions.
Vec project_to_manifold(const HomogeneousSpec& spec, Vec e, int rank) {
  for (int it = 0; it < 3; ++it) {
    const Mat T = tangent_basis(e);
    const Vec grad = tangent_gradient(spec, e);
    Eigen::SelfAdjointEigenSolver<Mat> es(tangent_hessian(spec, e));
    const Vec& lam = es.eigenvalues();
    std::vector<int> order(static_cast<std::size_t>(lam.size()));
    for (int i = 0; i < lam.size(); ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return std::abs(lam[x]) > std::abs(lam[y]); });
    Vec s = Vec::Zero(lam.size());
    for (int k = 0; k < rank; ++k) {
      const int i = order[static_cast<std::size_t>(k)];
      s += (-es.eigenvectors().col(i).dot(grad) / lam[i]) * es.eigenvectors().col(i);
    }
    if (s.norm() < 1e-14) break;
    e = normalized(e + T * s);
  }
  return e;
}

struct CurveTrace {
  double integral = 0;
  double length = 0;
  std::vector<Vec> points;
};

// Integrates dA / sqrt(pdet) along a closed maximizer curve through e0 by RK4
// in arc length, with the closing partial step located by secant iteration.
CurveTrace trace_closed_curve(const HomogeneousSpec& spec, const Vec& e0, int rank, double h) {
  CurveTrace out;
  const Vec tau0 = null_direction(spec, e0, Vec());

  struct Stage {
    Vec e_next;
    double dI;
    Vec dir;
  };
  auto rk4 = [&](const Vec& e, const Vec& dir, double step) {
    const Vec k1 = null_direction(spec, e, dir);
    const double w1 = manifold_weight(spec, e, rank);
    const Vec e2 = normalized(e + 0.5 * step * k1);
    const Vec k2 = null_direction(spec, e2, k1);
    const double w2 = manifold_weight(spec, e2, rank);
    const Vec e3 = normalized(e + 0.5 * step * k2);
    const Vec k3 = null_direction(spec, e3, k2);
    const double w3 = manifold_weight(spec, e3, rank);
    const Vec e4 = normalized(e + step * k3);
    const Vec k4 = null_direction(spec, e4, k3);
    const double w4 = manifold_weight(spec, e4, rank);
    Stage st;
    st.e_next = normalized(e + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    st.dI = step / 6.0 * (w1 + 2.0 * w2 + 2.0 * w3 + w4);
    st.dir = k4;
    return st;
  };
  auto side = [&](const Vec& e) { return tau0.dot(e - e0); };

  Vec e = e0;
  Vec dir = tau0;
  double s = 0.0;
  out.points.push_back(e0);
  const int max_steps = static_cast<int>(40.0 * num::kPi / h);
  for (int step = 0; step < max_steps; ++step) {
    Stage st = rk4(e, dir, h);
    const Vec e_next = project_to_manifold(spec, st.e_next, rank);
    const bool away = s > 4.0 * h;
    if (away && side(e) < 0.0 && side(e_next) >= 0.0 && (e_next - e0).norm() < 4.0 * h) {
      // closing step: find theta in (0, 1] with side(e(theta h)) = 0
      double lo = 0.0, hi = 1.0;
      double f_lo = side(e), f_hi = side(e_next);
      double theta = 1.0;
      Stage last = st;
      for (int it = 0; it < 40; ++it) {
        theta = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        last = rk4(e, dir, theta * h);
        const double f_mid = side(last.e_next);
        if (std::abs(f_mid) < 1e-15) break;
        if (f_mid < 0.0) {
          lo = theta;
          f_lo = f_mid;
        } else {
          hi = theta;
          f_hi = f_mid;
        }
        if (hi - lo < 1e-14) break;
      }
      out.integral += last.dI;
      out.length = s + theta * h;
      return out;
    }
    out.integral += st.dI;
    s += h;
    dir = st.dir;
    e = e_next;
    out.points.push_back(e);
  }
  throw ConditionViolation("maximizer curve did not close; the maximizer set is not a "
                           "compact smooth curve");
}

double integrate_box(const std::function<double(const Vec&)>& f,
                     const std::vector<std::pair<double, double>>& box, Vec& theta,
                     int dim) {
  const int m = static_cast<int>(box.size());
  if (dim == m) return f(theta);
  return num::integrate(
      [&](double t) {
        theta[dim] = t;
        return integrate_box(f, box, theta, dim + 1);
      },
      box[static_cast<std::size_t>(dim)].first, box[static_cast<std::size_t>(dim)].second,
      1e-9);
}

double chart_integral(const HomogeneousSpec& spec, const ManifoldChart& chart, int rank,
                      double g_hat, double tol) {
  const int m = chart.m;
  auto point = [&](const Vec& th) { return normalized(chart.map(th)); };
  Vec center(m);
  for (int i = 0; i < m; ++i)
    center[i] = 0.5 * (chart.box[static_cast<std::size_t>(i)].first +
                       chart.box[static_cast<std::size_t>(i)].second);
  if (std::abs(eval_g(spec, point(center)) - g_hat) > tol)
    throw ConditionViolation("manifold chart does not parametrize the maximizer set");

  auto integrand = [&](const Vec& th) {
    const Vec e = point(th);
    Mat G(spec.d(), m);
    const double step = 1e-6;
    for (int i = 0; i < m; ++i) {
      Vec tp = th, tm = th;
      tp[i] += step;
      tm[i] -= step;
      G.col(i) = (point(tp) - point(tm)) / (2.0 * step);
    }
    const double area = std::sqrt(std::abs((G.transpose() * G).determinant()));
    return area * manifold_weight(spec, e, rank);
  };
  Vec theta(m);
  return integrate_box(integrand, chart.box, theta, 0);
}

}  // namespace

SphereAnalysis analyze_numeric(const HomogeneousSpec& spec, const AnalysisOptions& opts) {
  const int d = spec.d();
  const int n = d - 1;
  if (opts.n_starts < 1) throw PreconditionError("analyze_sphere: n_starts must be >= 1");

  std::vector<LocalMax> found;
  found.reserve(static_cast<std::size_t>(opts.n_starts));
  for (int s = 0; s < opts.n_starts; ++s) {
    num::NormalSource src(num::derive_seed(opts.seed, 11, static_cast<std::uint64_t>(s)));
    Vec e(d);
    src.fill(e.data(), static_cast<std::size_t>(d));
    found.push_back(local_max(spec, normalized(e)));
  }
  double g_hat = -std::numeric_limits<double>::infinity();
  for (const auto& lm : found) g_hat = std::max(g_hat, lm.value);
  if (!(g_hat > 0.0))
    throw ConditionViolation("no point with g > 0 found on the sphere");

  const double tol = opts.tol_max * std::max(1.0, std::abs(g_hat));
  std::vector<Vec> reps;
  for (const auto& lm : found) {
    if (lm.value < g_hat - tol) continue;
    bool merged = false;
    for (const Vec& r : reps)
      if (arc_distance(r, lm.point) <= opts.arc_tol) {
        merged = true;
        break;
      }
    if (!merged) reps.push_back(lm.point);
  }

  std::vector<int> ranks;
  for (const Vec& e : reps) ranks.push_back(numeric_rank(tangent_hessian(spec, e), opts.rank_tol, spec.p() * g_hat));
  const int rank = ranks.front();
  for (int r : ranks)
    if (r != rank)
      throw ConditionViolation("near-maximal points have inconsistent Hessian rank; the "
                               "maximizer set mixes components of different dimension");

  SphereAnalysis a;
  a.d = d;
  a.p = spec.p();
  a.g_hat = g_hat;

  if (rank == n) {
    a.kind = MaximizerKind::PointSet;
    a.m = 0;
    for (const Vec& e : reps) a.maximizers.push_back(describe_point(spec, e, false));
    return a;
  }

  a.kind = MaximizerKind::Manifold;
  a.m = n - rank;
  if (static_cast<int>(reps.size()) < opts.min_manifold_samples) {
    std::ostringstream msg;
    msg << "Hessian is rank deficient (rank " << rank << " < " << n << ") but only "
        << reps.size() << " distinct near-maximal points were found; manifold detection needs "
        << opts.min_manifold_samples << " (increase n_starts)";
    throw ConditionViolation(msg.str());
  }
  for (const Vec& e : reps) {
    Maximizer mx;
    mx.point = e;
    mx.phi = angles_of(e);
    mx.jacobian = chart_jacobian(mx.phi);
    mx.hessian_det = pseudo_det(tangent_hessian(spec, e), rank);
    mx.hessian_rank = rank;
    a.maximizers.push_back(mx);
  }

  const auto& custom = std::get_if<Custom>(&spec.kind());
  if (a.m == n) {
    a.parametrization = "whole unit sphere S^" + std::to_string(n);
    a.manifold_integral = sphere_area(d);
  } else if (custom && custom->chart) {
    if (custom->chart->m != a.m) {
      std::ostringstream msg;
      msg << "manifold chart has dimension " << custom->chart->m << " but the Hessian rank "
          << "implies m = " << a.m;
      throw ConditionViolation(msg.str());
    }
    a.parametrization = "user chart, m=" + std::to_string(a.m);
    a.manifold_integral = chart_integral(spec, *custom->chart, rank, g_hat, 1e-6 * std::max(1.0, g_hat));
  } else if (a.m == 1) {
    const double h = 2.0 * num::kPi / 4096.0;
    std::vector<CurveTrace> traces;
    for (const Vec& e : reps) {
      bool covered = false;
      for (const auto& tr : traces) {
        for (const Vec& q : tr.points)
          if ((q - e).norm() < 4.0 * h) {
            covered = true;
            break;
          }
        if (covered) break;
      }
      if (covered) continue;
      if (traces.size() >= 16)
        throw ConditionViolation("more than 16 maximizer curves; unsupported");
      traces.push_back(trace_closed_curve(spec, project_to_manifold(spec, e, rank), rank, h));
    }
    double total = 0.0, length = 0.0;
    for (const auto& tr : traces) {
      total += tr.integral;
      length += tr.length;
    }
    std::ostringstream os;
    os << traces.size() << " closed curve(s), total length " << length;
    a.parametrization = os.str();
    a.manifold_integral = total;
  } else {
    std::ostringstream msg;
    msg << "maximizer manifold of dimension " << a.m
        << " needs an explicit ManifoldChart for its integral";
    throw ConditionViolation(msg.str());
  }
  return a;
}

}  // namespace chaosx::homog::detail
