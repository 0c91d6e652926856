#pragma once

// Serializable scalar functions of time used for a(t) and h(t).

#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace chaosx {

struct ConstFn {
  double v = 0;
};
// v0 + v1 * t
struct LinearFn {
  double v0 = 0;
  double v1 = 0;
};
// h_m - c |t - t0|^gamma
struct PowerPeakFn {
  double h_m = 0;
  double c = 1;
  double t0 = 0;
  double gamma = 1;
};
// Linear interpolation through (t, v) knots sorted by t; constant outside.
struct TableFn {
  std::vector<std::pair<double, double>> knots;
};

using NamedFunction = std::variant<ConstFn, LinearFn, PowerPeakFn, TableFn>;

double eval(const NamedFunction& f, double t);
std::function<double(double)> to_function(const NamedFunction& f);
// Maximum over [lo, hi] and the points attaining it (exact for every kind).
struct FunctionMax {
  double value = 0;
  std::vector<double> argmax;
  bool on_interval = false;  // the maximum is attained on a whole sub-interval
  double A = 0, B = 0;       // that sub-interval when on_interval
};
FunctionMax maximize(const NamedFunction& f, double lo, double hi);
std::string describe(const NamedFunction& f);
// Throws DomainError for non-finite parameters or unsorted/duplicate knots.
void validate(const NamedFunction& f);

}  // namespace chaosx
