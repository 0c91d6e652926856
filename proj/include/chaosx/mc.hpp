#pragma once

// Crude Monte Carlo for P(sup_{[0,T]} (Y(t) + h(t)) > u) on a grid.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chaosx/asympt.hpp"
#include "chaosx/constants.hpp"

namespace chaosx::mc {

struct EstimateWithCI {
  double p_hat = 0;
  std::int64_t n = 0;
  std::int64_t hits = 0;
  double ci_low = 0;  // Wilson score, 95%
  double ci_high = 0;
  double grid_step = 0;
  double wall_time_s = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

struct ComparisonRow {
  double u = 0;
  EstimateWithCI mc;
  double asympt_value = 0;
  double ratio = 0;  // p_hat / asympt_value
  asympt::Regime regime = asympt::Regime::Pickands;
};

struct McOptions {
  std::optional<double> grid_step;  // empty: auto
  std::int64_t n_samples = 100000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

// Wilson score interval for hits/n at the normal quantile z.
std::pair<double, double> wilson(std::int64_t hits, std::int64_t n, double z = 1.959963984540054);

// 0.1 (u / g_hat)^{-2/alpha*}, with u / g_hat floored at 1.
double auto_grid_step(const asympt::ProcessModel& m, double u);

// The grid actually simulated: [0, T] with step <= the requested one. An
// explicit covariance matrix fixes the grid to its size.
gauss::GridSpec simulation_grid(const asympt::ProcessModel& m, double grid_step);

// Number of paths whose grid supremum of Y + h exceeds each u; row k uses
// every strides[k]-th grid point. All rows share the same paths.
std::vector<std::vector<std::int64_t>> count_exceedances(const asympt::ProcessModel& m,
                                                         const gauss::GridSpec& grid,
                                                         const std::vector<double>& u_list,
                                                         std::int64_t n_samples, std::uint64_t seed,
                                                         unsigned threads,
                                                         const std::vector<int>& strides = {1});

// With a table, warns when n * (asymptotic value) < 10 and attaches the n
// needed for 10 expected hits.
EstimateWithCI estimate_sup_prob(const asympt::ProcessModel& m, double u, const McOptions& opts,
                                 const constants::ConstantTable* table = nullptr);

// One row per u. All u share one set of paths on the finest grid needed.
// Below the validity floor, or for models without asymptotics (an explicit
// covariance matrix), asympt_value is NaN with a warning; missing constants
// throw DependencyError.
std::vector<ComparisonRow> compare(const asympt::ProcessModel& m, const std::vector<double>& u_list,
                                   const McOptions& opts, const constants::ConstantTable& table);

}  // namespace chaosx::mc
