#include "chaosx/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>

#include <fftw3.h>

#include "chaosx/errors.hpp"

namespace chaosx::gauss {

namespace {

// FFTW planning is not thread safe; execution of distinct plans is.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

constexpr double kClipTol = 1e-10;
constexpr double kJitter = 1e-12;
constexpr int kMaxEmbeddingDoublings = 3;

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0))
    throw DomainError("alpha must lie in (0, 2], got " + num::format_double(alpha));
}

std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

// Real eigenvalues of the symmetric circulant matrix with first row `row`.
std::vector<double> circulant_eigenvalues(const std::vector<double>& row) {
  const std::size_t M = row.size();
  fftw_complex* buf = fftw_alloc_complex(M);
  for (std::size_t j = 0; j < M; ++j) {
    buf[j][0] = row[j];
    buf[j][1] = 0.0;
  }
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(M), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  std::vector<double> lambda(M);
  for (std::size_t j = 0; j < M; ++j) lambda[j] = buf[j][0];
  fftw_free(buf);
  return lambda;
}

}  // namespace

void GridSpec::validate() const {
  if (!std::isfinite(t_start) || !std::isfinite(t_end) || !(t_end > t_start))
    throw PreconditionError("grid requires finite t_start < t_end");
  if (n_points < 2) throw PreconditionError("grid requires n_points >= 2");
}

double sigma(const VarianceSpec& var, double t) {
  if (std::holds_alternative<UnitVariance>(var)) return 1.0;
  const auto& lp = std::get<LocalPower>(var);
  if (lp.sigma_fn) {
    const double v = lp.sigma_fn(t);
    if (!(v > 0.0 && v <= 1.0))
      throw DomainError("sigma(t) must lie in (0, 1], got " + num::format_double(v) +
                        " at t=" + num::format_double(t));
    return v;
  }
  const double x = lp.b * std::pow(std::abs(t - lp.t0), lp.beta);
  return x <= 0.5 ? 1.0 - x : 0.25 / x;
}

double correlation(const CorrelationSpec& corr, double s, double t) {
  if (const auto* se = std::get_if<StationaryExp>(&corr))
    return std::exp(-se->a * std::pow(std::abs(t - s), se->alpha));
  if (const auto* ls = std::get_if<LocallyStationary>(&corr)) {
    const double a = ls->a_fn(0.5 * (s + t));
    return std::exp(-a * std::pow(std::abs(t - s), ls->alpha));
  }
  throw PreconditionError("an explicit covariance matrix has no correlation function");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Linear: return "linear";
    case Method::AR1: return "ar1";
    case Method::Circulant: return "circulant";
    case Method::Cholesky: return "cholesky";
    case Method::Projected: return "projected";
  }
  return "unknown";
}

// ---- plans ------------------------------------------------------------------

struct PathSampler::Plan {
  Method method = Method::Cholesky;
  int n = 0;
  double clipped = 0.0;
  // Linear: out_i = times_i * Z.
  std::vector<double> times;
  // AR1
  double rho = 0.0;
  // Circulant: sqrt(lambda / M); n_values outputs (increments when cumulate).
  std::vector<double> sqrt_lambda;
  int n_values = 0;
  bool cumulate = false;
  // Cholesky (lower triangular) or projected factor.
  Eigen::MatrixXd factor;
};

struct PathSampler::Workspace {
  fftw_complex* buf = nullptr;
  fftw_plan plan = nullptr;
  std::vector<double> cached;
  bool has_cached = false;
  Eigen::VectorXd z;

  ~Workspace() {
    if (plan) {
      std::lock_guard<std::mutex> lock(fftw_mutex());
      fftw_destroy_plan(plan);
    }
    if (buf) fftw_free(buf);
  }
};

namespace {

// Factorizes a dense covariance. Cholesky with a tiny jitter first; when
// `allow_projection`, fall back to clipping negative eigenvalues at 0.
template <class P>
void dense_factor(P& plan, const Eigen::MatrixXd& cov, bool allow_projection) {
  const int n = static_cast<int>(cov.rows());
  Eigen::MatrixXd jittered = cov;
  jittered.diagonal().array() += kJitter;
  Eigen::LLT<Eigen::MatrixXd> llt(jittered);
  if (llt.info() == Eigen::Success) {
    plan.method = Method::Cholesky;
    plan.factor = llt.matrixL();
    return;
  }
  if (!allow_projection)
    throw SimulationError("covariance is numerically indefinite: circulant embedding and "
                          "Cholesky factorization both failed");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw SimulationError("eigendecomposition of covariance failed");
  Eigen::VectorXd ev = es.eigenvalues();
  double neg = 0.0;
  for (int i = 0; i < n; ++i)
    if (ev[i] < 0.0) {
      neg += -ev[i];
      ev[i] = 0.0;
    }
  plan.method = Method::Projected;
  plan.clipped = neg / std::max(cov.trace(), 1e-300);
  plan.factor = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

// Circulant embedding of a stationary sequence c(k), k >= 0, needing n_values
// outputs. Returns false when the embedding stays indefinite.
template <class P, class Cov>
bool circulant_plan(P& plan, int n_values, Cov c) {
  std::size_t m = next_pow2(static_cast<std::size_t>(std::max(1, n_values - 1)));
  for (int attempt = 0; attempt <= kMaxEmbeddingDoublings; ++attempt, m *= 2) {
    const std::size_t M = 2 * m;
    std::vector<double> row(M);
    for (std::size_t j = 0; j <= m; ++j) row[j] = c(static_cast<double>(j));
    for (std::size_t j = m + 1; j < M; ++j) row[j] = row[M - j];
    std::vector<double> lambda = circulant_eigenvalues(row);
    const double top = *std::max_element(lambda.begin(), lambda.end());
    const double low = *std::min_element(lambda.begin(), lambda.end());
    if (low < -kClipTol * top) continue;
    double neg = 0.0, total = 0.0;
    plan.sqrt_lambda.resize(M);
    for (std::size_t j = 0; j < M; ++j) {
      total += std::abs(lambda[j]);
      if (lambda[j] < 0.0) neg += -lambda[j];
      plan.sqrt_lambda[j] = std::sqrt(std::max(lambda[j], 0.0) / static_cast<double>(M));
    }
    plan.method = Method::Circulant;
    plan.n_values = n_values;
    plan.clipped = total > 0.0 ? neg / total : 0.0;
    return true;
  }
  return false;
}

}  // namespace

PathSampler::PathSampler(std::shared_ptr<const Plan> plan) : plan_(std::move(plan)) {}

PathSampler::PathSampler(const PathSampler& other) : plan_(other.plan_) {}

PathSampler& PathSampler::operator=(const PathSampler& other) {
  if (this != &other) {
    plan_ = other.plan_;
    ws_.reset();
  }
  return *this;
}

PathSampler::PathSampler(PathSampler&&) noexcept = default;
PathSampler& PathSampler::operator=(PathSampler&&) noexcept = default;
PathSampler::~PathSampler() = default;

int PathSampler::size() const { return plan_->n; }
Method PathSampler::method() const { return plan_->method; }
double PathSampler::clipped_mass() const { return plan_->clipped; }

void PathSampler::reset() {
  if (ws_) ws_->has_cached = false;
}

PathSampler PathSampler::correlated(const CorrelationSpec& corr, const GridSpec& grid) {
  grid.validate();
  auto plan = std::make_shared<Plan>();
  plan->n = grid.n_points;
  const int n = grid.n_points;
  const double dt = grid.step();

  if (const auto* se = std::get_if<StationaryExp>(&corr)) {
    check_alpha(se->alpha);
    if (!(se->a > 0.0) || !std::isfinite(se->a)) throw DomainError("correlation scale a must be > 0");
    if (se->alpha == 1.0) {
      plan->method = Method::AR1;
      plan->rho = std::exp(-se->a * dt);
      return PathSampler(plan);
    }
    auto c = [&](double k) { return std::exp(-se->a * std::pow(k * dt, se->alpha)); };
    if (!circulant_plan(*plan, n, c)) {
      Eigen::MatrixXd cov(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cov(i, j) = c(std::abs(i - j));
      dense_factor(*plan, cov, false);
    }
    return PathSampler(plan);
  }

  Eigen::MatrixXd cov(n, n);
  if (const auto* ls = std::get_if<LocallyStationary>(&corr)) {
    check_alpha(ls->alpha);
    if (!ls->a_fn) throw PreconditionError("locally stationary correlation needs a(t)");
    for (int i = 0; i < n; ++i) {
      const double a = ls->a_fn(grid.t(i));
      if (!(a > 0.0) || !std::isfinite(a))
        throw DomainError("a(t) must be positive, got " + num::format_double(a) + " at t=" +
                          num::format_double(grid.t(i)));
    }
    for (int i = 0; i < n; ++i) {
      cov(i, i) = 1.0;
      for (int j = i + 1; j < n; ++j) cov(i, j) = cov(j, i) = correlation(corr, grid.t(i), grid.t(j));
    }
  } else {
    const auto& m = std::get<CustomPSDMatrix>(corr).cov;
    if (m.rows() != n || m.cols() != n)
      throw PreconditionError("covariance matrix size does not match the grid");
    if (!m.allFinite()) throw DomainError("covariance matrix has non-finite entries");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw DomainError("covariance matrix is not symmetric");
    if ((m.diagonal().array() - 1.0).abs().maxCoeff() > 1e-9)
      throw DomainError("correlation matrix must have a unit diagonal");
    cov = m;
  }
  dense_factor(*plan, cov, true);
  return PathSampler(plan);
}

PathSampler PathSampler::fbm(double alpha, const GridSpec& grid) {
  check_alpha(alpha);
  grid.validate();
  if (grid.t_start != 0.0) throw PreconditionError("fBm grids must start at t = 0");
  auto plan = std::make_shared<Plan>();
  const int n = grid.n_points;
  plan->n = n;
  if (alpha == 2.0) {
    plan->method = Method::Linear;
    plan->times.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) plan->times[static_cast<std::size_t>(i)] = grid.t(i);
    return PathSampler(plan);
  }
  // Increments (fractional Gaussian noise) are stationary.
  const double scale = std::pow(grid.step(), alpha);
  auto c = [&](double k) {
    return 0.5 * scale *
           (std::pow(k + 1.0, alpha) - 2.0 * std::pow(k, alpha) + std::pow(std::abs(k - 1.0), alpha));
  };
  plan->cumulate = true;
  if (!circulant_plan(*plan, n - 1, c)) {
    Eigen::MatrixXd cov(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double s = grid.t(i), t = grid.t(j);
        cov(i, j) = 0.5 * (std::pow(s, alpha) + std::pow(t, alpha) - std::pow(std::abs(s - t), alpha));
      }
    // B(0) = 0 makes the full matrix singular; factor the rest.
    Eigen::MatrixXd inner = cov.bottomRightCorner(n - 1, n - 1);
    dense_factor(*plan, inner, false);
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n, n);
    full.bottomRightCorner(n - 1, n - 1) = plan->factor;
    plan->factor = full;
    plan->cumulate = false;
  }
  return PathSampler(plan);
}

void PathSampler::sample(num::NormalSource& src, double* out) {
  const Plan& p = *plan_;
  const int n = p.n;
  switch (p.method) {
    case Method::Linear: {
      const double z = src();
      for (int i = 0; i < n; ++i) out[i] = p.times[static_cast<std::size_t>(i)] * z;
      return;
    }
    case Method::AR1: {
      const double innov = std::sqrt(1.0 - p.rho * p.rho);
      double x = src();
      out[0] = x;
      for (int i = 1; i < n; ++i) {
        x = p.rho * x + innov * src();
        out[i] = x;
      }
      return;
    }
    case Method::Circulant: break;
    case Method::Cholesky:
    case Method::Projected: {
      if (!ws_) ws_ = std::make_unique<Workspace>();
      ws_->z.resize(p.factor.cols());
      src.fill(ws_->z.data(), static_cast<std::size_t>(ws_->z.size()));
      Eigen::Map<Eigen::VectorXd> o(out, n);
      if (p.method == Method::Cholesky)
        o.noalias() = p.factor.triangularView<Eigen::Lower>() * ws_->z;
      else
        o.noalias() = p.factor * ws_->z;
      return;
    }
  }

  if (!ws_) ws_ = std::make_unique<Workspace>();
  Workspace& w = *ws_;
  const std::size_t M = p.sqrt_lambda.size();
  const int nv = p.n_values;
  auto emit = [&](const double* vals) {
    if (!p.cumulate) {
      std::copy(vals, vals + n, out);
      return;
    }
    double acc = 0.0;
    out[0] = 0.0;
    for (int i = 1; i < n; ++i) {
      acc += vals[i - 1];
      out[i] = acc;
    }
  };
  if (w.has_cached) {
    w.has_cached = false;
    emit(w.cached.data());
    return;
  }
  if (!w.buf) {
    w.buf = fftw_alloc_complex(M);
    std::lock_guard<std::mutex> lock(fftw_mutex());
    w.plan = fftw_plan_dft_1d(static_cast<int>(M), w.buf, w.buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (std::size_t j = 0; j < M; ++j) {
    const double s = p.sqrt_lambda[j];
    w.buf[j][0] = s * src();
    w.buf[j][1] = s * src();
  }
  fftw_execute(w.plan);
  std::vector<double> first(static_cast<std::size_t>(nv));
  w.cached.resize(static_cast<std::size_t>(nv));
  for (int i = 0; i < nv; ++i) {
    first[static_cast<std::size_t>(i)] = w.buf[i][0];
    w.cached[static_cast<std::size_t>(i)] = w.buf[i][1];
  }
  w.has_cached = true;
  emit(first.data());
}

// ---- one-shot helpers ---------------------------------------------------------

GridPath simulate_fbm(double alpha, const GridSpec& grid, std::uint64_t seed) {
  PathSampler s = PathSampler::fbm(alpha, grid);
  num::NormalSource src(seed);
  GridPath path{grid, std::vector<double>(static_cast<std::size_t>(grid.n_points)), seed};
  s.sample(src, path.values.data());
  return path;
}

GridPath simulate_stationary(const CorrelationSpec& corr, const GridSpec& grid,
                             std::uint64_t seed) {
  PathSampler s = PathSampler::correlated(corr, grid);
  num::NormalSource src(seed);
  GridPath path{grid, std::vector<double>(static_cast<std::size_t>(grid.n_points)), seed};
  s.sample(src, path.values.data());
  return path;
}

std::vector<GridPath> simulate_vector(int d, const CorrelationSpec& corr,
                                      const VarianceSpec& var, const GridSpec& grid,
                                      std::uint64_t seed) {
  if (d < 1) throw PreconditionError("simulate_vector needs d >= 1");
  PathSampler s = PathSampler::correlated(corr, grid);
  std::vector<double> sig(static_cast<std::size_t>(grid.n_points));
  for (int i = 0; i < grid.n_points; ++i) sig[static_cast<std::size_t>(i)] = sigma(var, grid.t(i));
  std::vector<GridPath> out;
  out.reserve(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    const std::uint64_t child = num::derive_seed(seed, 1, static_cast<std::uint64_t>(k));
    num::NormalSource src(child);
    s.reset();
    GridPath path{grid, std::vector<double>(sig.size()), child};
    s.sample(src, path.values.data());
    for (std::size_t i = 0; i < sig.size(); ++i) path.values[i] *= sig[i];
    out.push_back(std::move(path));
  }
  return out;
}

GridPath chaos_path(const homog::HomogeneousSpec& spec, const std::vector<GridPath>& paths) {
  if (static_cast<int>(paths.size()) != spec.d())
    throw PreconditionError("chaos_path needs exactly d component paths");
  const GridSpec& grid = paths.front().grid;
  for (const auto& p : paths) {
    if (p.grid.n_points != grid.n_points || p.grid.t_start != grid.t_start ||
        p.grid.t_end != grid.t_end || p.values.size() != static_cast<std::size_t>(grid.n_points))
      throw PreconditionError("chaos_path components must share one grid");
  }
  GridPath out{grid, std::vector<double>(static_cast<std::size_t>(grid.n_points)),
               paths.front().seed_used};
  std::vector<double> x(paths.size());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    for (std::size_t k = 0; k < paths.size(); ++k) x[k] = paths[k].values[i];
    out.values[i] = homog::eval_g(spec, x);
  }
  return out;
}

void dump_paths(const std::vector<GridPath>& paths, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const auto file = dir / ("comp_" + std::to_string(k) + ".csv");
    std::ofstream os(file, std::ios::binary);
    if (!os) throw Error("cannot write " + file.string());
    os << "t,value\n";
    const auto& p = paths[k];
    for (std::size_t i = 0; i < p.values.size(); ++i)
      os << num::format_double(p.grid.t(static_cast<int>(i))) << ',' << num::format_double(p.values[i])
         << '\n';
  }
}

}  // namespace chaosx::gauss
