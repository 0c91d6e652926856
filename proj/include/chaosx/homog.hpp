#pragma once

// Homogeneous functions g on R^d, their maxima on the unit sphere, and the
// large-x tail/density expansions of g(xi) for a standard normal vector xi.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace chaosx::homog {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// g(x) = ||x||_rho^p; rho may be +infinity.
struct LrhoNorm {
  double rho = 2.0;
};
// g(x) = x_1 * ... * x_d (order d).
struct Product {};
// g(x) = max_i x_i (order 1).
struct Max {};

// Explicit parametrization of a maximizer manifold of dimension m:
// theta in the box -> a point of R^d (normalized onto the sphere on use).
struct ManifoldChart {
  int m = 1;
  std::vector<std::pair<double, double>> box;
  std::function<Vec(const Vec&)> map;
};

struct Custom {
  std::function<double(std::span<const double>)> evaluator;
  std::string name = "custom";
  std::optional<ManifoldChart> chart;
};

using Kind = std::variant<LrhoNorm, Product, Max, Custom>;

class HomogeneousSpec {
 public:
  static HomogeneousSpec lrho_norm(double rho, double p, int d);
  static HomogeneousSpec product(int d);
  static HomogeneousSpec max(int d);
  // Homogeneity of order p is verified on random probes; throws DomainError
  // when it fails or when g is nowhere positive.
  static HomogeneousSpec custom(std::function<double(std::span<const double>)> g,
                                double p, int d, std::string name = "custom",
                                std::optional<ManifoldChart> chart = std::nullopt,
                                std::uint64_t probe_seed = 7);

  // Same function multiplied by factor > 0 (order unchanged).
  HomogeneousSpec scaled(double factor) const;

  const Kind& kind() const { return kind_; }
  double p() const { return p_; }
  int d() const { return d_; }
  double scale() const { return scale_; }
  bool is_builtin() const { return !std::holds_alternative<Custom>(kind_); }
  std::string describe() const;

 private:
  HomogeneousSpec(Kind kind, double p, int d) : kind_(std::move(kind)), p_(p), d_(d) {}
  Kind kind_;
  double p_ = 1.0;
  int d_ = 2;
  double scale_ = 1.0;
};

double eval_g(const HomogeneousSpec& spec, std::span<const double> x);
inline double eval_g(const HomogeneousSpec& spec, const Vec& x) {
  return eval_g(spec, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

// Cartesian gradient and Hessian for built-in kinds. Returns false for
// Custom, or where g is not twice differentiable at x.
bool cartesian_derivatives(const HomogeneousSpec& spec, const Vec& x, Vec& grad,
                           Mat& hess);

// ---- spherical chart --------------------------------------------------------
//
// x_1 = cos phi_1, x_2 = sin phi_1 cos phi_2, ...,
// x_d = sin phi_1 ... sin phi_{d-2} sin phi_{d-1}.

Vec sphere_point(const Vec& phi);
Vec angles_of(const Vec& e);
// J(1, phi) = sin^{d-2} phi_1 ... sin phi_{d-2}.
double chart_jacobian(const Vec& phi);
// Smallest sin(phi_i) over i <= d-2 (1 when d == 2).
double chart_pole_distance(const Vec& phi);

// A chart is the natural spherical map composed with an orthogonal matrix.
struct Chart {
  Mat rotation;  // d x d
  bool rotated = false;
};
Chart natural_chart(int d);
// Chart whose reference angles (pi/2,...,pi/2,pi/4) land on e.
Chart rotated_chart_for(const Vec& e);
Vec chart_reference_angles(int d);

// Hessian of phi -> g(R x(phi)) in closed form (built-ins only).
Mat chart_hessian(const HomogeneousSpec& spec, const Chart& chart, const Vec& phi);
// Same by central finite differences.
Mat chart_hessian_fd(const HomogeneousSpec& spec, const Chart& chart, const Vec& phi,
                     double step = 1e-4);

// |det g''(phi)| in the natural chart: closed form for built-ins, central
// finite differences for Custom. Throws ChartError near a pole.
double hessian_det(const HomogeneousSpec& spec, const Vec& phi);
double hessian_det_fd(const HomogeneousSpec& spec, const Vec& phi, double step = 1e-4);

// Orthonormal basis (d x (d-1)) of the tangent space of the sphere at e.
Mat tangent_basis(const Vec& e);
// Hessian of v -> g(normalize(e + T v)) at v = 0. At a critical point this is
// the Riemannian Hessian; it is chart independent.
Mat tangent_hessian(const HomogeneousSpec& spec, const Vec& e, double fd_step = 1e-4);
Vec tangent_gradient(const HomogeneousSpec& spec, const Vec& e, double fd_step = 1e-6);

// ---- sphere analysis --------------------------------------------------------

enum class MaximizerKind { PointSet, Manifold };

struct Maximizer {
  Vec point;            // unit vector
  Vec phi;              // chart angles of the point
  bool rotated_chart = false;
  double jacobian = 1;  // J(1, phi) in the chart used
  double hessian_det = 0;  // |det g''(phi)| (case i) or |det g''_{d-1-m}| (case ii)
  int hessian_rank = 0;
};

struct SphereAnalysis {
  int d = 2;
  double p = 1;
  double g_hat = 0;
  MaximizerKind kind = MaximizerKind::PointSet;
  int m = 0;
  // Isolated maximizers (case i), or sample points on the manifold (case ii).
  std::vector<Maximizer> maximizers;
  std::string parametrization;  // description of the manifold for case ii
  // Case ii: integral over the maximizer set of dA / sqrt(pdet Hessian).
  double manifold_integral = 0;
  double h0 = 0;
};

struct AnalysisOptions {
  double tol_max = 1e-8;      // g-value tie tolerance
  double arc_tol = 1e-6;      // arc distance below which points merge
  int n_starts = 64;
  std::uint64_t seed = 1;
  int min_manifold_samples = 32;
  double rank_tol = 1e-6;     // singular values below rank_tol * largest are zero
  double det_tol = 1e-8;
  // Use the multi-start search even when a closed form exists.
  bool force_numeric = false;
};

SphereAnalysis analyze_sphere(const HomogeneousSpec& spec, const AnalysisOptions& opts = {});

double h0(const SphereAnalysis& analysis, double p);

// Smallest x for which the asymptotic formulas are evaluated:
// x^{2/p} >= 4 * g_hat^{2/p}.
double validity_floor(const SphereAnalysis& analysis, double p);

// h0 (x/g_hat)^{(m-1)/p} exp(-x^{2/p} / (2 g_hat^{2/p})). Throws RangeError
// below the validity floor.
double tail_asympt(const SphereAnalysis& analysis, double p, double x);
double pdf_asympt(const SphereAnalysis& analysis, double p, double x);

}  // namespace chaosx::homog
