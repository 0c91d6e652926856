#include "chaosx/constants.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "chaosx/errors.hpp"
#include "chaosx/gauss.hpp"
#include "chaosx/numerics.hpp"

namespace chaosx::constants {

namespace {

constexpr std::uint64_t kStreamShift = 21;
constexpr std::uint64_t kStreamDirect = 22;
constexpr std::uint64_t kStreamPiterbarg = 23;
constexpr std::size_t kBlock = 256;
// Two-sided paths are simulated on [-L, L] with L^alpha >= 50; beyond that
// exp(sqrt(2) B(t) - |t|^alpha) is negligible against its value at t = 0.
constexpr double kHorizonExponent = 50.0;
constexpr double kMinHalfWidth = 10.0;
constexpr double kAutoHorizonBound = 1e-3;
constexpr double kHorizonErrorFraction = 0.1;

// Running mean / second moment, mergeable in a fixed order.
struct Moments {
  long long n = 0;
  double mean = 0;
  double m2 = 0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }
  double std_error() const {
    if (n < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0))
    throw DomainError("alpha must lie in (0, 2], got " + num::format_double(alpha));
}

void check_run(const RunOptions& run) {
  if (run.n_rep < 1) throw PreconditionError("n_rep must be >= 1");
}

// Number of steps of size delta in S; throws unless delta divides S.
long long steps_in(double S, double delta, const char* what) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("delta must be positive");
  const double r = std::round(S / delta);
  if (std::abs(S - r * delta) > 1e-12 * std::max(1.0, S))
    throw PreconditionError(std::string(what) + ": delta=" + num::format_double(delta) +
                            " does not divide S=" + num::format_double(S));
  return static_cast<long long>(r);
}

// max over i = i0 + j*stride of sqrt(2a)(path[i] - path[i0]) - a|s|^alpha - f(s),
// s = (i - i0) * step.
double centered_sup(std::span<const double> path, double step, double alpha, double a,
                    const DriftFunctionSpec& f, int stride, std::size_t i0) {
  const double root = std::sqrt(2.0 * a);
  const double base = path[i0];
  double best = -std::numeric_limits<double>::infinity();
  const std::size_t first = i0 % static_cast<std::size_t>(stride);
  for (std::size_t i = first; i < path.size(); i += static_cast<std::size_t>(stride)) {
    const double s = (static_cast<double>(i) - static_cast<double>(i0)) * step;
    const double v = root * (path[i] - base) - a * std::pow(std::abs(s), alpha) - eval_drift(f, s);
    best = std::max(best, v);
  }
  return best;
}

// Sum over all placements of a window of w consecutive lattice points of the
// largest e[i] inside it; values outside [0, n) count as 0.
double window_max_sum(const std::vector<double>& e, std::size_t w) {
  const std::size_t n = e.size();
  std::deque<std::size_t> q;
  double total = 0.0;
  for (std::size_t r = 0; r + 1 < n + w; ++r) {
    if (r < n) {
      while (!q.empty() && e[q.back()] <= e[r]) q.pop_back();
      q.push_back(r);
    }
    while (r + 1 >= w && q.front() < r + 1 - w) q.pop_front();
    total += e[q.front()];
  }
  return total;
}

struct Ladder {
  std::vector<double> S;      // ascending
  std::vector<double> delta;  // descending
  std::vector<Moments> cells;  // S-major; each holds H[0,S] (not divided by S)
  Moments extrapolated;        // per-replicate extrapolation of H[0,S]/S
};

// Shift-averaged estimator on common paths: for a two-sided W on delta Z,
// H(E) = E[ sum_j max_{E - j delta} e^W / sum_i e^{W(i delta)} ].
Ladder shift_averaged(double alpha, std::vector<double> S_list, std::vector<double> deltas,
                      const RunOptions& run) {
  check_alpha(alpha);
  check_run(run);
  if (S_list.empty() || deltas.empty()) throw PreconditionError("empty S or delta ladder");
  std::sort(S_list.begin(), S_list.end());
  std::sort(deltas.begin(), deltas.end(), std::greater<>());
  const double d_min = deltas.back();
  const double d_max = deltas.front();

  std::vector<int> stride;
  for (double d : deltas) {
    const long long k = steps_in(d, d_min, "delta ladder");
    if (k < 1) throw PreconditionError("delta ladder must be positive");
    stride.push_back(static_cast<int>(k));
  }
  std::vector<std::vector<std::size_t>> width(S_list.size());
  for (std::size_t s = 0; s < S_list.size(); ++s) {
    if (!(S_list[s] > 0.0)) throw PreconditionError("S must be positive");
    for (double d : deltas) width[s].push_back(static_cast<std::size_t>(steps_in(S_list[s], d, "pickands")) + 1);
  }

  double L = std::max(kMinHalfWidth, std::pow(kHorizonExponent, 1.0 / alpha));
  L = std::ceil(L / d_max) * d_max;
  const long long half = steps_in(L, d_min, "horizon");
  const gauss::GridSpec grid{0.0, 2.0 * L, static_cast<int>(2 * half + 1)};
  const gauss::PathSampler proto = gauss::PathSampler::fbm(alpha, grid);
  const std::size_t i0 = static_cast<std::size_t>(half);

  const std::size_t nS = S_list.size(), nd = deltas.size();
  const std::size_t n_ext = std::min<std::size_t>(2, nS);
  std::vector<double> x(nd);
  for (std::size_t k = 0; k < nd; ++k) x[k] = std::pow(deltas[k], alpha / 2.0);

  struct Block {
    std::vector<Moments> cells;
    Moments ext;
  };
  auto blocks = num::run_blocks<Block>(
      static_cast<std::size_t>(run.n_rep), kBlock, run.threads, [&] { return proto; },
      [&](gauss::PathSampler& sampler, std::size_t b, std::size_t begin, std::size_t end) {
        Block out;
        out.cells.resize(nS * nd);
        num::NormalSource src(num::derive_seed(run.seed, kStreamShift, b));
        sampler.reset();
        std::vector<double> path(static_cast<std::size_t>(grid.n_points));
        std::vector<double> w(path.size()), e;
        std::vector<double> y(nS * nd);
        for (std::size_t r = begin; r < end; ++r) {
          sampler.sample(src, path.data());
          for (std::size_t i = 0; i < path.size(); ++i) {
            const double s = (static_cast<double>(i) - static_cast<double>(i0)) * d_min;
            w[i] = std::sqrt(2.0) * (path[i] - path[i0]) - std::pow(std::abs(s), alpha);
          }
          for (std::size_t k = 0; k < nd; ++k) {
            e.clear();
            const std::size_t st = static_cast<std::size_t>(stride[k]);
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t i = i0 % st; i < w.size(); i += st) top = std::max(top, w[i]);
            double denom = 0.0;
            for (std::size_t i = i0 % st; i < w.size(); i += st) {
              e.push_back(std::exp(w[i] - top));
              denom += e.back();
            }
            for (std::size_t s = 0; s < nS; ++s) {
              const double h = window_max_sum(e, width[s][k]) / denom;
              out.cells[s * nd + k].add(h);
              y[s * nd + k] = h / S_list[s];
            }
          }
          double ext = 0.0;
          for (std::size_t s = nS - n_ext; s < nS; ++s) {
            if (nd == 1) {
              ext += y[s];
              continue;
            }
            double mx = 0, my = 0;
            for (std::size_t k = 0; k < nd; ++k) {
              mx += x[k];
              my += y[s * nd + k];
            }
            mx /= static_cast<double>(nd);
            my /= static_cast<double>(nd);
            double sxy = 0, sxx = 0;
            for (std::size_t k = 0; k < nd; ++k) {
              sxy += (x[k] - mx) * (y[s * nd + k] - my);
              sxx += (x[k] - mx) * (x[k] - mx);
            }
            ext += my - (sxy / sxx) * mx;
          }
          out.ext.add(ext / static_cast<double>(n_ext));
        }
        return out;
      });

  Ladder lad;
  lad.S = S_list;
  lad.delta = deltas;
  lad.cells.resize(nS * nd);
  for (const auto& b : blocks) {
    for (std::size_t c = 0; c < b.cells.size(); ++c) lad.cells[c].merge(b.cells[c]);
    lad.extrapolated.merge(b.ext);
  }
  return lad;
}

ConstantEstimate direct_pickands(double alpha, double S, double delta, const RunOptions& run) {
  const long long n = steps_in(S, delta, "pickands_finite");
  const gauss::GridSpec grid{0.0, S, static_cast<int>(n + 1)};
  const gauss::PathSampler proto = gauss::PathSampler::fbm(alpha, grid);
  auto blocks = num::run_blocks<Moments>(
      static_cast<std::size_t>(run.n_rep), kBlock, run.threads, [&] { return proto; },
      [&](gauss::PathSampler& sampler, std::size_t b, std::size_t begin, std::size_t end) {
        Moments m;
        num::NormalSource src(num::derive_seed(run.seed, kStreamDirect, b));
        sampler.reset();
        std::vector<double> path(static_cast<std::size_t>(grid.n_points));
        for (std::size_t r = begin; r < end; ++r) {
          sampler.sample(src, path.data());
          m.add(std::exp(sup_exponent(path, delta, alpha, 1.0, ZeroDrift{})));
        }
        return m;
      });
  Moments total;
  for (const auto& b : blocks) total.merge(b);
  ConstantEstimate est;
  est.value = total.mean;
  est.std_error = total.std_error();
  est.n_rep = total.n;
  est.delta = delta;
  est.S = S;
  return est;
}

}  // namespace

double eval_drift(const DriftFunctionSpec& f, double t) {
  if (std::holds_alternative<ZeroDrift>(f)) return 0.0;
  const auto& ps = std::get<PowerSum>(f);
  const double x = std::abs(t);
  double v = 0.0;
  if (ps.c_gamma != 0.0) v += ps.c_gamma * std::pow(x, ps.gamma);
  if (ps.b_beta != 0.0) v += ps.b_beta * std::pow(x, ps.beta);
  return v;
}

bool is_zero(const DriftFunctionSpec& f) {
  if (std::holds_alternative<ZeroDrift>(f)) return true;
  const auto& ps = std::get<PowerSum>(f);
  return ps.c_gamma == 0.0 && ps.b_beta == 0.0;
}

std::string describe(const DriftFunctionSpec& f) {
  if (is_zero(f)) return "0";
  const auto& ps = std::get<PowerSum>(f);
  std::vector<std::pair<double, double>> terms;  // (exponent, coefficient)
  if (ps.c_gamma != 0.0) terms.emplace_back(ps.gamma, ps.c_gamma);
  if (ps.b_beta != 0.0) terms.emplace_back(ps.beta, ps.b_beta);
  std::sort(terms.begin(), terms.end());
  if (terms.size() == 2 && terms[0].first == terms[1].first) {
    terms[0].second += terms[1].second;
    terms.pop_back();
  }
  std::string out;
  for (const auto& [e, c] : terms) {
    if (!out.empty()) out += '+';
    out += num::format_double(c) + "*t^" + num::format_double(e);
  }
  return out;
}

void validate(const DriftFunctionSpec& f) {
  if (std::holds_alternative<ZeroDrift>(f)) return;
  const auto& ps = std::get<PowerSum>(f);
  if (!(ps.c_gamma >= 0.0) || !(ps.b_beta >= 0.0) || !std::isfinite(ps.c_gamma) ||
      !std::isfinite(ps.b_beta))
    throw DomainError("drift coefficients must be finite and >= 0");
  if (!(ps.gamma > 0.0) || !(ps.beta > 0.0) || !std::isfinite(ps.gamma) || !std::isfinite(ps.beta))
    throw DomainError("drift exponents must be finite and > 0");
}

std::string to_string(Domain d) { return d == Domain::HalfLine ? "half" : "full"; }

double sup_exponent(std::span<const double> path, double step, double alpha, double a,
                    const DriftFunctionSpec& f, int stride) {
  if (path.empty()) throw PreconditionError("empty path");
  if (stride < 1) throw PreconditionError("stride must be >= 1");
  return centered_sup(path, step, alpha, a, f, stride, 0);
}

ConstantEstimate pickands_finite(double alpha, double S, double delta, const RunOptions& run,
                                 Estimator est) {
  check_alpha(alpha);
  check_run(run);
  if (!(S >= 0.0) || !std::isfinite(S)) throw DomainError("S must be >= 0");
  if (S == 0.0) {
    ConstantEstimate one;
    one.value = 1.0;
    one.n_rep = run.n_rep;
    one.delta = delta;
    return one;
  }
  if (est == Estimator::Auto) est = S <= 1.0 ? Estimator::Direct : Estimator::ShiftAveraged;
  if (est == Estimator::Direct) return direct_pickands(alpha, S, delta, run);

  const Ladder lad = shift_averaged(alpha, {S}, {delta}, run);
  ConstantEstimate out;
  out.value = lad.cells[0].mean;
  out.std_error = lad.cells[0].std_error();
  out.n_rep = lad.cells[0].n;
  out.delta = delta;
  out.S = S;
  return out;
}

ConstantEstimate pickands(double alpha, const PickandsOptions& opts) {
  const Ladder lad = shift_averaged(alpha, opts.S_list, opts.delta_list, opts.run);
  const std::size_t nd = lad.delta.size();
  ConstantEstimate out;
  for (std::size_t s = 0; s < lad.S.size(); ++s) {
    for (std::size_t k = 0; k < nd; ++k) {
      const Moments& m = lad.cells[s * nd + k];
      ConstantEstimate cell;
      cell.value = m.mean / lad.S[s];
      cell.std_error = m.std_error() / lad.S[s];
      cell.n_rep = m.n;
      cell.delta = lad.delta[k];
      cell.S = lad.S[s];
      out.ladder.push_back(cell);
    }
    // Finer grids can only raise each path's supremum.
    for (std::size_t k = 1; k < nd; ++k) {
      const auto& coarse = out.ladder[s * nd + k - 1];
      const auto& fine = out.ladder[s * nd + k];
      const double tol = 2.0 * std::hypot(coarse.std_error, fine.std_error);
      if (fine.value < coarse.value - tol)
        out.warnings.push_back("non-monotone ladder at S=" + num::format_double(lad.S[s]) +
                               ": H[0,S]/S drops from " + num::format_double(coarse.value) +
                               " to " + num::format_double(fine.value) + " when delta goes " +
                               num::format_double(coarse.delta) + " -> " +
                               num::format_double(fine.delta));
    }
  }
  out.value = lad.extrapolated.mean;
  out.std_error = lad.extrapolated.std_error();
  out.n_rep = lad.extrapolated.n;
  out.delta = lad.delta.back();
  out.S = lad.S.back();
  out.extrapolated = true;
  return out;
}

double truncation_bound(const DriftFunctionSpec& f, Domain domain, double S, double delta) {
  if (is_zero(f)) return std::numeric_limits<double>::infinity();
  const long long k0 = static_cast<long long>(std::floor(S / delta + 1e-9)) + 1;
  double sum = 0.0;
  for (long long k = k0; k < k0 + 100000000LL; ++k) {
    const double term = std::exp(-eval_drift(f, static_cast<double>(k) * delta));
    sum += term;
    if (term <= 1e-17 * sum || term < 1e-300) return domain == Domain::FullLine ? 2.0 * sum : sum;
  }
  return std::numeric_limits<double>::infinity();
}

ConstantEstimate piterbarg(double alpha, double a, const DriftFunctionSpec& f, Domain domain,
                           const PiterbargOptions& opts) {
  check_alpha(alpha);
  check_run(opts.run);
  validate(f);
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("a must be positive");
  if (is_zero(f)) throw PreconditionError("the Piterbarg constant needs a drift f that is not zero");
  const double delta = opts.delta;
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("delta must be positive");

  ConstantEstimate out;
  out.delta = delta;
  out.n_rep = opts.run.n_rep;
  double S = 0.0;
  if (opts.S) {
    S = *opts.S;
    if (!(S >= 0.0) || !std::isfinite(S)) throw DomainError("S must be >= 0");
    if (S == 0.0) {
      out.value = 1.0;
      return out;
    }
    steps_in(S, delta, "piterbarg");
  } else {
    for (double s = 1.0;; s *= 2.0) {
      if (s > 1e5) throw HorizonError("no horizon S <= 1e5 brings the truncation bound below 1e-3");
      S = std::ceil(s / delta - 1e-9) * delta;
      if (truncation_bound(f, domain, S, delta) <= kAutoHorizonBound) break;
    }
  }
  out.S = S;
  out.truncation_bound = truncation_bound(f, domain, S, delta);

  const long long n = steps_in(S, delta, "piterbarg");
  const bool full = domain == Domain::FullLine;
  const gauss::GridSpec grid{0.0, full ? 2.0 * S : S, static_cast<int>(full ? 2 * n + 1 : n + 1)};
  const std::size_t i0 = full ? static_cast<std::size_t>(n) : 0;
  const gauss::PathSampler proto = gauss::PathSampler::fbm(alpha, grid);
  auto blocks = num::run_blocks<Moments>(
      static_cast<std::size_t>(opts.run.n_rep), kBlock, opts.run.threads, [&] { return proto; },
      [&](gauss::PathSampler& sampler, std::size_t b, std::size_t begin, std::size_t end) {
        Moments m;
        num::NormalSource src(num::derive_seed(opts.run.seed, kStreamPiterbarg, b));
        sampler.reset();
        std::vector<double> path(static_cast<std::size_t>(grid.n_points));
        for (std::size_t r = begin; r < end; ++r) {
          sampler.sample(src, path.data());
          m.add(std::exp(centered_sup(path, delta, alpha, a, f, 1, i0)));
        }
        return m;
      });
  Moments total;
  for (const auto& b : blocks) total.merge(b);
  out.value = total.mean;
  out.std_error = total.std_error();
  out.n_rep = total.n;
  if (out.truncation_bound > kHorizonErrorFraction * out.value)
    throw HorizonError("truncation bound " + num::format_double(out.truncation_bound) +
                       " exceeds 10% of the estimate " + num::format_double(out.value) +
                       "; increase S beyond " + num::format_double(S));
  return out;
}

// ---- table ------------------------------------------------------------------

ConstantKey ConstantKey::pickands(double alpha) {
  ConstantKey k;
  k.kind = ConstantKind::Pickands;
  k.alpha = alpha;
  return k;
}

ConstantKey ConstantKey::piterbarg(double alpha, double a, const DriftFunctionSpec& f,
                                   Domain domain) {
  ConstantKey k;
  k.kind = ConstantKind::Piterbarg;
  k.alpha = alpha;
  k.a = a;
  k.f = f;
  k.domain = domain;
  return k;
}

std::string ConstantKey::to_string() const {
  if (kind == ConstantKind::Pickands) return "pickands(alpha=" + num::format_double(alpha) + ")";
  return "piterbarg(alpha=" + num::format_double(alpha) + ",a=" + num::format_double(a) +
         ",f=" + describe(f) + ",domain=" + constants::to_string(domain) + ")";
}

void ConstantTable::put(const ConstantKey& key, ConstantEstimate est) {
  entries_[key.to_string()] = Entry{key, std::move(est)};
}

const ConstantEstimate* ConstantTable::find(const ConstantKey& key) const {
  const auto it = entries_.find(key.to_string());
  return it == entries_.end() ? nullptr : &it->second.estimate;
}

const ConstantEstimate& ConstantTable::require(const ConstantKey& key) const {
  if (const auto* e = find(key)) return *e;
  const std::string k = key.to_string();
  throw DependencyError("missing constant " + k + "; run `chaosx constants` for it first", k);
}

}  // namespace chaosx::constants
