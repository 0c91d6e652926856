#include "chaosx/mc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "chaosx/errors.hpp"
#include "chaosx/numerics.hpp"

namespace chaosx::mc {

namespace {

constexpr std::uint64_t kStreamMc = 31;
constexpr std::size_t kBlock = 256;
constexpr std::int64_t kMinSamples = 1000;
constexpr double kMinExpectedHits = 10.0;

struct Counts {
  std::vector<std::int64_t> hits;  // stride-major, then u
};

void check_u_list(const std::vector<double>& u_list) {
  if (u_list.empty()) throw PreconditionError("u list is empty");
  for (double u : u_list)
    if (std::isnan(u)) throw DomainError("u must not be NaN");
}

void check_samples(std::int64_t n) {
  if (n < kMinSamples)
    throw PreconditionError("n_samples must be at least " + std::to_string(kMinSamples) + ", got " +
                            std::to_string(n));
}

EstimateWithCI make_estimate(std::int64_t hits, std::int64_t n, double step, std::uint64_t seed) {
  EstimateWithCI e;
  e.n = n;
  e.hits = hits;
  e.p_hat = static_cast<double>(hits) / static_cast<double>(n);
  std::tie(e.ci_low, e.ci_high) = wilson(hits, n);
  e.grid_step = step;
  e.seed = seed;
  return e;
}

void power_check(EstimateWithCI& e, double asympt_value, double u) {
  if (!(asympt_value > 0.0) || !std::isfinite(asympt_value)) return;
  const double expected = asympt_value * static_cast<double>(e.n);
  if (expected < kMinExpectedHits) {
    const double need = std::ceil(kMinExpectedHits / asympt_value);
    e.warnings.push_back("under-powered at u=" + num::format_double(u) + ": expected hits " +
                         num::format_double(expected) + " < 10; need n >= " +
                         num::format_double(need));
  }
}

}  // namespace

std::pair<double, double> wilson(std::int64_t hits, std::int64_t n, double z) {
  if (n <= 0 || hits < 0 || hits > n) throw PreconditionError("wilson needs 0 <= hits <= n, n > 0");
  const double nn = static_cast<double>(n);
  const double k = static_cast<double>(hits);
  const double z2 = z * z;
  const double centre = (k + 0.5 * z2) / (nn + z2);
  const double half = z / (nn + z2) * std::sqrt(k * (nn - k) / nn + 0.25 * z2);
  const double p = k / nn;
  const double lo = hits == 0 ? 0.0 : std::min(p, std::max(0.0, centre - half));
  const double hi = hits == n ? 1.0 : std::max(p, std::min(1.0, centre + half));
  return {lo, hi};
}

double auto_grid_step(const asympt::ProcessModel& m, double u) {
  if (const auto* cm = std::get_if<gauss::CustomPSDMatrix>(&m.corr))
    return m.T / static_cast<double>(std::max<Eigen::Index>(cm->cov.rows() - 1, 1));
  const double alpha_star = m.alpha() * m.p();
  const double r = std::max(u / m.analysis.g_hat, 1.0);
  return 0.1 * std::pow(r, -2.0 / alpha_star);
}

gauss::GridSpec simulation_grid(const asympt::ProcessModel& m, double grid_step) {
  if (!(m.T > 0.0) || !std::isfinite(m.T)) throw PreconditionError("horizon T must be positive");
  if (const auto* cm = std::get_if<gauss::CustomPSDMatrix>(&m.corr))
    return {0.0, m.T, static_cast<int>(cm->cov.rows())};
  if (!(grid_step > 0.0) || !std::isfinite(grid_step))
    throw PreconditionError("grid_step must be positive");
  const double cells = std::ceil(m.T / grid_step * (1.0 - 1e-12));
  if (cells > 5e7) throw PreconditionError("grid_step too small for horizon T");
  return {0.0, m.T, static_cast<int>(std::max(cells, 1.0)) + 1};
}

std::vector<std::vector<std::int64_t>> count_exceedances(const asympt::ProcessModel& m,
                                                         const gauss::GridSpec& grid,
                                                         const std::vector<double>& u_list,
                                                         std::int64_t n_samples, std::uint64_t seed,
                                                         unsigned threads,
                                                         const std::vector<int>& strides) {
  check_u_list(u_list);
  if (n_samples < 0) throw PreconditionError("n_samples must be non-negative");
  if (strides.empty()) throw PreconditionError("strides must not be empty");
  for (int s : strides)
    if (s < 1) throw PreconditionError("strides must be >= 1");
  grid.validate();

  const auto n_pts = static_cast<std::size_t>(grid.n_points);
  const int d = m.g.d();
  std::vector<double> sig(n_pts), hv(n_pts);
  for (std::size_t i = 0; i < n_pts; ++i) {
    const double t = grid.t(static_cast<int>(i));
    sig[i] = gauss::sigma(m.var, t);
    hv[i] = m.trend.at(t);
  }
  const auto proto = gauss::PathSampler::correlated(m.corr, grid);
  const std::size_t nu = u_list.size();
  const std::size_t ns = strides.size();

  auto blocks = num::run_blocks<Counts>(
      static_cast<std::size_t>(n_samples), kBlock, threads, [&] { return proto; },
      [&](gauss::PathSampler& sampler, std::size_t b, std::size_t begin, std::size_t end) {
        Counts out;
        out.hits.assign(ns * nu, 0);
        num::NormalSource src(num::derive_seed(seed, kStreamMc, b));
        sampler.reset();
        std::vector<double> comps(static_cast<std::size_t>(d) * n_pts), x(static_cast<std::size_t>(d)),
            y(n_pts);
        for (std::size_t r = begin; r < end; ++r) {
          for (int j = 0; j < d; ++j) sampler.sample(src, comps.data() + static_cast<std::size_t>(j) * n_pts);
          for (std::size_t i = 0; i < n_pts; ++i) {
            for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(j)] = sig[i] * comps[static_cast<std::size_t>(j) * n_pts + i];
            y[i] = homog::eval_g(m.g, std::span<const double>(x)) + hv[i];
          }
          for (std::size_t k = 0; k < ns; ++k) {
            const auto st = static_cast<std::size_t>(strides[k]);
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n_pts; i += st) top = std::max(top, y[i]);
            for (std::size_t q = 0; q < nu; ++q)
              if (top > u_list[q]) ++out.hits[k * nu + q];
          }
        }
        return out;
      });

  std::vector<std::vector<std::int64_t>> total(ns, std::vector<std::int64_t>(nu, 0));
  for (const auto& b : blocks)
    for (std::size_t k = 0; k < ns; ++k)
      for (std::size_t q = 0; q < nu; ++q) total[k][q] += b.hits[k * nu + q];
  return total;
}

EstimateWithCI estimate_sup_prob(const asympt::ProcessModel& m, double u, const McOptions& opts,
                                 const constants::ConstantTable* table) {
  check_samples(opts.n_samples);
  const auto t0 = std::chrono::steady_clock::now();
  const auto grid = simulation_grid(m, opts.grid_step.value_or(auto_grid_step(m, u)));
  const auto hits = count_exceedances(m, grid, {u}, opts.n_samples, opts.seed, opts.threads);
  auto e = make_estimate(hits[0][0], opts.n_samples, grid.step(), opts.seed);
  e.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (table) {
    try {
      power_check(e, asympt::evaluate(m, u, *table).value, u);
    } catch (const RangeError&) {
      // Below the validity floor there is no asymptotic guide for n.
    }
  }
  return e;
}

std::vector<ComparisonRow> compare(const asympt::ProcessModel& m, const std::vector<double>& u_list,
                                   const McOptions& opts, const constants::ConstantTable& table) {
  check_samples(opts.n_samples);
  check_u_list(u_list);
  // Asymptotics first, so a missing constant fails before any simulation.
  std::vector<ComparisonRow> rows(u_list.size());
  for (std::size_t q = 0; q < u_list.size(); ++q) {
    rows[q].u = u_list[q];
    try {
      const auto r = asympt::evaluate(m, u_list[q], table);
      rows[q].asympt_value = r.value;
      rows[q].regime = r.regime;
    } catch (const RangeError& e) {
      rows[q].asympt_value = std::numeric_limits<double>::quiet_NaN();
      rows[q].mc.warnings.push_back(e.what());
    } catch (const ApplicabilityError& e) {
      rows[q].asympt_value = std::numeric_limits<double>::quiet_NaN();
      rows[q].mc.warnings.push_back(e.what());
    }
  }
  double step = opts.grid_step.value_or(std::numeric_limits<double>::infinity());
  if (!opts.grid_step)
    for (double u : u_list) step = std::min(step, auto_grid_step(m, u));

  const auto t0 = std::chrono::steady_clock::now();
  const auto grid = simulation_grid(m, step);
  const auto hits = count_exceedances(m, grid, u_list, opts.n_samples, opts.seed, opts.threads);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  for (std::size_t q = 0; q < u_list.size(); ++q) {
    auto warnings = std::move(rows[q].mc.warnings);
    rows[q].mc = make_estimate(hits[0][q], opts.n_samples, grid.step(), opts.seed);
    rows[q].mc.warnings = std::move(warnings);
    rows[q].mc.wall_time_s = wall;
    power_check(rows[q].mc, rows[q].asympt_value, u_list[q]);
    rows[q].ratio = rows[q].mc.p_hat / rows[q].asympt_value;
  }
  return rows;
}

}  // namespace chaosx::mc
