#pragma once

// Exact simulation of fractional Brownian motion and of the stationary /
// locally-stationary Gaussian processes used as coordinates of X(t).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "chaosx/homog.hpp"
#include "chaosx/numerics.hpp"

namespace chaosx::gauss {

struct GridSpec {
  double t_start = 0;
  double t_end = 1;
  int n_points = 2;

  double step() const { return (t_end - t_start) / (n_points - 1); }
  double t(int i) const { return i == n_points - 1 ? t_end : t_start + i * step(); }
  // Throws PreconditionError unless t_end > t_start and n_points >= 2.
  void validate() const;
};

// r(t) = exp(-a |t|^alpha).
struct StationaryExp {
  double a = 1;
  double alpha = 1;
};
// r(s, t) = exp(-a((s + t) / 2) |t - s|^alpha).
struct LocallyStationary {
  std::function<double(double)> a_fn;
  double alpha = 1;
};
// Explicit covariance on the grid (must match n_points).
struct CustomPSDMatrix {
  Eigen::MatrixXd cov;
};
using CorrelationSpec = std::variant<StationaryExp, LocallyStationary, CustomPSDMatrix>;

struct UnitVariance {};
// sigma(t) = 1 - b|t - t0|^beta near t0. Without sigma_fn the profile is
// continued beyond b|t - t0|^beta = 1/2 by 1/(4 b |t - t0|^beta), which keeps
// it positive, decreasing and C^1.
struct LocalPower {
  double b = 1;
  double beta = 1;
  double t0 = 0;
  std::function<double(double)> sigma_fn;
};
using VarianceSpec = std::variant<UnitVariance, LocalPower>;

double sigma(const VarianceSpec& var, double t);

// Covariance of two grid points for a correlation form.
double correlation(const CorrelationSpec& corr, double s, double t);

struct GridPath {
  GridSpec grid;
  std::vector<double> values;
  std::uint64_t seed_used = 0;
};

enum class Method { Linear, AR1, Circulant, Cholesky, Projected };
std::string to_string(Method m);

// Draws unit-variance paths on a fixed grid. The factorization is computed
// once and shared between copies; each copy owns its own FFT workspace, so
// copies may be used concurrently.
//
// Circulant embedding produces two independent paths per FFT. The second is
// served by the next sample() call; call reset() before drawing from a new
// NormalSource so that output depends only on that source.
class PathSampler {
 public:
  static PathSampler correlated(const CorrelationSpec& corr, const GridSpec& grid);
  // fBm B_alpha on a grid starting at 0 (so B(t_start) = 0).
  static PathSampler fbm(double alpha, const GridSpec& grid);

  PathSampler(const PathSampler& other);
  PathSampler& operator=(const PathSampler& other);
  PathSampler(PathSampler&&) noexcept;
  PathSampler& operator=(PathSampler&&) noexcept;
  ~PathSampler();

  void sample(num::NormalSource& src, double* out);
  void reset();

  int size() const;
  Method method() const;
  // Mass of negative eigenvalues removed when the covariance was made PSD,
  // relative to its trace (0 when nothing was clipped).
  double clipped_mass() const;

 private:
  struct Plan;
  struct Workspace;
  explicit PathSampler(std::shared_ptr<const Plan> plan);
  std::shared_ptr<const Plan> plan_;
  std::unique_ptr<Workspace> ws_;
};

GridPath simulate_fbm(double alpha, const GridSpec& grid, std::uint64_t seed);
GridPath simulate_stationary(const CorrelationSpec& corr, const GridSpec& grid,
                             std::uint64_t seed);
// d i.i.d. components sigma(t) * Z_i(t); component i uses derive_seed(seed, 1, i).
std::vector<GridPath> simulate_vector(int d, const CorrelationSpec& corr,
                                      const VarianceSpec& var, const GridSpec& grid,
                                      std::uint64_t seed);

GridPath chaos_path(const homog::HomogeneousSpec& spec, const std::vector<GridPath>& paths);

// Writes comp_<i>.csv (header `t,value`) for every component into dir.
void dump_paths(const std::vector<GridPath>& paths, const std::filesystem::path& dir);

}  // namespace chaosx::gauss
