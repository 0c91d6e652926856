#pragma once

// Monte Carlo estimates of the Pickands constant H_alpha and the Piterbarg
// constant P^f_{alpha,a}(E), and a keyed table to hold them.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace chaosx::constants {

struct ZeroDrift {};
// f(t) = c_gamma t^gamma + b_beta t^beta for t >= 0, even for t < 0.
struct PowerSum {
  double c_gamma = 0;
  double gamma = 1;
  double b_beta = 0;
  double beta = 1;
};
using DriftFunctionSpec = std::variant<ZeroDrift, PowerSum>;

double eval_drift(const DriftFunctionSpec& f, double t);
bool is_zero(const DriftFunctionSpec& f);
// Canonical text: "0", or terms "c*t^e" joined by '+', sorted by exponent
// with equal exponents merged and zero coefficients dropped.
std::string describe(const DriftFunctionSpec& f);
// Throws DomainError for negative coefficients or non-positive exponents.
void validate(const DriftFunctionSpec& f);

enum class Domain { HalfLine, FullLine };
std::string to_string(Domain d);

struct ConstantEstimate {
  double value = 0;
  double std_error = 0;
  long long n_rep = 0;
  double delta = 0;
  double S = 0;
  bool extrapolated = false;
  // Piterbarg: union bound on the contribution of the grid beyond S.
  double truncation_bound = 0;
  // Pickands: the H[0,S]/S ladder cells the extrapolation was built from.
  std::vector<ConstantEstimate> ladder;
  std::vector<std::string> warnings;
};

enum class Estimator {
  Auto,           // Direct when S <= 1, ShiftAveraged otherwise
  Direct,         // mean of sup exp(sqrt(2) B(t) - t^alpha) over the grid
  ShiftAveraged,  // average over lattice shifts of a two-sided path
};

struct RunOptions {
  int n_rep = 20000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

// max over grid points i*step (i a multiple of stride) of
// sqrt(2a) path[i] - a (i step)^alpha - f(i step).
double sup_exponent(std::span<const double> path, double step, double alpha, double a,
                    const DriftFunctionSpec& f, int stride = 1);

// H_alpha[0,S] = E sup_{t in delta Z, 0 <= t <= S} exp(sqrt(2) B(t) - t^alpha).
ConstantEstimate pickands_finite(double alpha, double S, double delta, const RunOptions& run = {},
                                 Estimator est = Estimator::Auto);

struct PickandsOptions {
  std::vector<double> S_list{32, 64, 128};
  std::vector<double> delta_list{0.2, 0.1, 0.05};
  RunOptions run;
};
// Extrapolates H[0,S]/S to delta -> 0, linearly in delta^{alpha/2}, per
// replicate, and averages the last two S values.
ConstantEstimate pickands(double alpha, const PickandsOptions& opts = {});

struct PiterbargOptions {
  // Horizon; chosen automatically (truncation bound <= 1e-3) when empty.
  // S = 0 is the degenerate domain {0}.
  std::optional<double> S;
  double delta = 0.01;
  RunOptions run;
};
ConstantEstimate piterbarg(double alpha, double a, const DriftFunctionSpec& f, Domain domain,
                           const PiterbargOptions& opts = {});

// Sum over grid points t = k delta > S of exp(-f(t)); doubled on the full line.
double truncation_bound(const DriftFunctionSpec& f, Domain domain, double S, double delta);

// ---- keyed table ------------------------------------------------------------

enum class ConstantKind { Pickands, Piterbarg };

struct ConstantKey {
  ConstantKind kind = ConstantKind::Pickands;
  double alpha = 1;
  double a = 1;
  DriftFunctionSpec f = ZeroDrift{};
  Domain domain = Domain::HalfLine;

  static ConstantKey pickands(double alpha);
  static ConstantKey piterbarg(double alpha, double a, const DriftFunctionSpec& f, Domain domain);
  // Canonical text; Pickands keys ignore a, f and domain.
  std::string to_string() const;
};

class ConstantTable {
 public:
  void put(const ConstantKey& key, ConstantEstimate est);
  const ConstantEstimate* find(const ConstantKey& key) const;
  // Throws DependencyError naming the key when absent.
  const ConstantEstimate& require(const ConstantKey& key) const;
  bool contains(const ConstantKey& key) const { return find(key) != nullptr; }
  std::size_t size() const { return entries_.size(); }

  struct Entry {
    ConstantKey key;
    ConstantEstimate estimate;
  };
  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace chaosx::constants
