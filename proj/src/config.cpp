#include "chaosx/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "chaosx/errors.hpp"
#include "chaosx/numerics.hpp"

namespace chaosx::cli {

namespace {

using asympt::Interval;
using asympt::PointSet;
using asympt::SinglePoint;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}
std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
}

void allow_keys(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
  require_object(j, path);
  const std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(join(path, k), "unknown field");
}

double as_num(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

double num(const Json& j, const std::string& path, const char* key, std::optional<double> def = {}) {
  if (!j.contains(key)) {
    if (def) return *def;
    throw ConfigError(join(path, key), "required field is missing");
  }
  return as_num(j.at(key), join(path, key));
}

double positive(const Json& j, const std::string& path, const char* key, std::optional<double> def = {}) {
  const double v = num(j, path, key, def);
  if (!(v > 0.0)) throw ConfigError(join(path, key), "must be > 0");
  return v;
}

std::int64_t integer(const Json& j, const std::string& path, const char* key, std::int64_t def) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
  return v.get<std::int64_t>();
}

std::string str(const Json& j, const std::string& path, const char* key, std::optional<std::string> def = {}) {
  if (!j.contains(key)) {
    if (def) return *def;
    throw ConfigError(join(path, key), "required field is missing");
  }
  if (!j.at(key).is_string()) throw ConfigError(join(path, key), "expected a string");
  return j.at(key).get<std::string>();
}

std::vector<double> num_list(const Json& j, const std::string& path, const char* key,
                             std::vector<double> def) {
  if (!j.contains(key)) return def;
  const auto& a = j.at(key);
  const std::string p = join(path, key);
  if (!a.is_array()) throw ConfigError(p, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_num(a[i], index(p, i)));
  return out;
}

SinglePoint point_from_json(const Json& j, const std::string& path) {
  allow_keys(j, path, {"kind", "t0", "c", "gamma"});
  SinglePoint sp{num(j, path, "t0"), num(j, path, "c"), positive(j, path, "gamma")};
  if (sp.c < 0.0) throw ConfigError(join(path, "c"), "must be >= 0");
  return sp;
}

Json point_to_json(const SinglePoint& sp) {
  return {{"kind", "point"}, {"t0", sp.t0}, {"c", sp.c}, {"gamma", sp.gamma}};
}

MaximizerConfig maximizer_from_json(const Json& j, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() == "auto") return AutoMaximizer{};
    throw ConfigError(path, "expected \"auto\" or an object");
  }
  require_object(j, path);
  const std::string kind = str(j, path, "kind");
  if (kind == "point") return point_from_json(j, path);
  if (kind == "points") {
    allow_keys(j, path, {"kind", "points"});
    const std::string p = join(path, "points");
    if (!j.contains("points") || !j.at("points").is_array() || j.at("points").empty())
      throw ConfigError(p, "expected a non-empty array of points");
    PointSet ps;
    for (std::size_t i = 0; i < j.at("points").size(); ++i)
      ps.points.push_back(point_from_json(j.at("points")[i], index(p, i)));
    return ps;
  }
  if (kind == "interval") {
    allow_keys(j, path, {"kind", "A", "B"});
    Interval iv{num(j, path, "A"), num(j, path, "B")};
    if (!(iv.A < iv.B)) throw ConfigError(path, "interval needs A < B");
    return iv;
  }
  throw ConfigError(join(path, "kind"), "unknown maximizer kind '" + kind +
                                            "' (expected point, points, interval)");
}

Json maximizer_to_json(const MaximizerConfig& m) {
  if (std::holds_alternative<AutoMaximizer>(m)) return "auto";
  if (const auto* sp = std::get_if<SinglePoint>(&m)) return point_to_json(*sp);
  if (const auto* ps = std::get_if<PointSet>(&m)) {
    Json pts = Json::array();
    for (const auto& p : ps->points) pts.push_back(point_to_json(p));
    return {{"kind", "points"}, {"points", pts}};
  }
  const auto& iv = std::get<Interval>(m);
  return {{"kind", "interval"}, {"A", iv.A}, {"B", iv.B}};
}

HomogConfig homog_from_json(const Json& j, const std::string& path) {
  allow_keys(j, path, {"kind", "rho", "p", "d", "scale"});
  HomogConfig h;
  h.kind = str(j, path, "kind");
  h.d = static_cast<int>(integer(j, path, "d", 2));
  if (h.d < 1) throw ConfigError(join(path, "d"), "must be >= 1");
  h.scale = positive(j, path, "scale", 1.0);
  if (h.kind == "lrho_norm") {
    h.rho = positive(j, path, "rho", 2.0);
    h.p = positive(j, path, "p", 2.0);
  } else if (h.kind == "product") {
    h.p = h.d;
  } else if (h.kind == "max") {
    h.p = 1;
  } else {
    throw ConfigError(join(path, "kind"), "unknown homogeneous function '" + h.kind +
                                              "' (expected lrho_norm, product, max)");
  }
  return h;
}

Json homog_to_json(const HomogConfig& h) {
  Json j{{"kind", h.kind}, {"d", h.d}, {"scale", h.scale}};
  if (h.kind == "lrho_norm") {
    j["rho"] = h.rho;
    j["p"] = h.p;
  }
  return j;
}

CorrConfig corr_from_json(const Json& j, const std::string& path) {
  allow_keys(j, path, {"form", "alpha", "a", "cov"});
  CorrConfig c;
  c.form = str(j, path, "form");
  if (c.form == "stationary_exp" || c.form == "locally_stationary") {
    c.alpha = positive(j, path, "alpha");
    if (c.alpha > 2.0) throw ConfigError(join(path, "alpha"), "must lie in (0, 2]");
    if (c.form == "stationary_exp") {
      c.a = positive(j, path, "a", 1.0);
    } else {
      if (!j.contains("a")) throw ConfigError(join(path, "a"), "required named function is missing");
      c.a_fn = named_function_from_json(j.at("a"), join(path, "a"));
    }
  } else if (c.form == "matrix") {
    const std::string p = join(path, "cov");
    if (!j.contains("cov") || !j.at("cov").is_array()) throw ConfigError(p, "expected a square matrix");
    const auto& rows = j.at("cov");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].is_array() || rows[i].size() != rows.size())
        throw ConfigError(index(p, i), "expected a row of length " + std::to_string(rows.size()));
      std::vector<double> r;
      for (std::size_t k = 0; k < rows[i].size(); ++k) r.push_back(as_num(rows[i][k], index(index(p, i), k)));
      c.cov.push_back(std::move(r));
    }
    if (c.cov.size() < 2) throw ConfigError(p, "needs at least 2 grid points");
  } else {
    throw ConfigError(join(path, "form"), "unknown correlation form '" + c.form +
                                              "' (expected stationary_exp, locally_stationary, matrix)");
  }
  return c;
}

Json corr_to_json(const CorrConfig& c) {
  Json j{{"form", c.form}};
  if (c.form == "stationary_exp") {
    j["alpha"] = c.alpha;
    j["a"] = c.a;
  } else if (c.form == "locally_stationary") {
    j["alpha"] = c.alpha;
    j["a"] = named_function_to_json(c.a_fn);
  } else {
    j["cov"] = c.cov;
  }
  return j;
}

VarConfig var_from_json(const Json& j, const std::string& path) {
  allow_keys(j, path, {"form", "b", "beta", "t0"});
  VarConfig v;
  v.form = str(j, path, "form");
  if (v.form == "local_power") {
    v.b = positive(j, path, "b");
    v.beta = positive(j, path, "beta");
    v.t0 = num(j, path, "t0", 0.0);
  } else if (v.form != "unit") {
    throw ConfigError(join(path, "form"), "unknown variance form '" + v.form +
                                              "' (expected unit, local_power)");
  }
  return v;
}

Json var_to_json(const VarConfig& v) {
  if (v.form == "unit") return {{"form", "unit"}};
  return {{"form", v.form}, {"b", v.b}, {"beta", v.beta}, {"t0", v.t0}};
}

TrendConfig trend_from_json(const Json& j, const std::string& path) {
  TrendConfig t;
  if (j.is_null()) return t;
  allow_keys(j, path, {"h", "maximizer", "h_m"});
  if (!j.contains("h")) throw ConfigError(join(path, "h"), "required named function is missing");
  t.h = named_function_from_json(j.at("h"), join(path, "h"));
  if (j.contains("maximizer")) t.maximizer = maximizer_from_json(j.at("maximizer"), join(path, "maximizer"));
  if (j.contains("h_m")) t.h_m = num(j, path, "h_m");
  return t;
}

Json trend_to_json(const TrendConfig& t) {
  if (!t.h) return nullptr;
  Json j{{"h", named_function_to_json(*t.h)}, {"maximizer", maximizer_to_json(t.maximizer)}};
  if (t.h_m) j["h_m"] = *t.h_m;
  return j;
}

ModelConfig model_from_json(const Json& j, const std::string& path) {
  allow_keys(j, path, {"homog", "corr", "var", "trend", "T", "t0_location"});
  ModelConfig m;
  if (!j.contains("homog")) throw ConfigError(join(path, "homog"), "required field is missing");
  m.homog = homog_from_json(j.at("homog"), join(path, "homog"));
  if (j.contains("corr")) m.corr = corr_from_json(j.at("corr"), join(path, "corr"));
  if (j.contains("var")) m.var = var_from_json(j.at("var"), join(path, "var"));
  if (j.contains("trend")) m.trend = trend_from_json(j.at("trend"), join(path, "trend"));
  m.T = positive(j, path, "T", 1.0);
  if (j.contains("t0_location")) {
    const std::string loc = str(j, path, "t0_location");
    if (loc == "boundary")
      m.location = asympt::Location::Boundary;
    else if (loc == "interior")
      m.location = asympt::Location::Interior;
    else
      throw ConfigError(join(path, "t0_location"), "expected boundary or interior");
  }
  return m;
}

Json model_to_json(const ModelConfig& m) {
  Json j{{"homog", homog_to_json(m.homog)},
         {"corr", corr_to_json(m.corr)},
         {"var", var_to_json(m.var)},
         {"trend", trend_to_json(m.trend)},
         {"T", m.T}};
  if (m.location) j["t0_location"] = *m.location == asympt::Location::Interior ? "interior" : "boundary";
  return j;
}

RunBlock run_from_json(const Json& j, const std::string& path) {
  allow_keys(j, path, {"u_list", "n_samples", "grid_step", "seed", "threads"});
  RunBlock r;
  r.u_list = num_list(j, path, "u_list", {});
  r.n_samples = integer(j, path, "n_samples", r.n_samples);
  if (r.n_samples < 0) throw ConfigError(join(path, "n_samples"), "must be >= 0");
  if (j.contains("grid_step")) {
    const auto& g = j.at("grid_step");
    if (g.is_string() && g.get<std::string>() == "auto")
      r.grid_step.reset();
    else
      r.grid_step = positive(j, path, "grid_step");
  }
  const auto seed = integer(j, path, "seed", 1);
  if (seed < 0) throw ConfigError(join(path, "seed"), "must be >= 0");
  r.seed = static_cast<std::uint64_t>(seed);
  const auto threads = integer(j, path, "threads", 0);
  if (threads < 0) throw ConfigError(join(path, "threads"), "must be >= 0");
  r.threads = static_cast<unsigned>(threads);
  return r;
}

Json run_to_json(const RunBlock& r) {
  Json j{{"u_list", r.u_list}, {"n_samples", r.n_samples}, {"seed", r.seed}, {"threads", r.threads}};
  if (r.grid_step)
    j["grid_step"] = *r.grid_step;
  else
    j["grid_step"] = "auto";
  return j;
}

ConstantsBlock constants_from_json(const Json& j, const std::string& path) {
  allow_keys(j, path, {"cache", "pickands_alpha", "S_list", "delta_list", "n_rep", "seed",
                       "piterbarg_S", "piterbarg_delta"});
  ConstantsBlock c;
  c.cache = str(j, path, "cache", c.cache);
  c.pickands_alpha = num_list(j, path, "pickands_alpha", {});
  for (std::size_t i = 0; i < c.pickands_alpha.size(); ++i)
    if (!(c.pickands_alpha[i] > 0.0 && c.pickands_alpha[i] <= 2.0))
      throw ConfigError(index(join(path, "pickands_alpha"), i), "must lie in (0, 2]");
  c.S_list = num_list(j, path, "S_list", c.S_list);
  c.delta_list = num_list(j, path, "delta_list", c.delta_list);
  if (c.S_list.empty()) throw ConfigError(join(path, "S_list"), "must not be empty");
  if (c.delta_list.empty()) throw ConfigError(join(path, "delta_list"), "must not be empty");
  c.n_rep = static_cast<int>(integer(j, path, "n_rep", c.n_rep));
  if (c.n_rep < 2) throw ConfigError(join(path, "n_rep"), "must be >= 2");
  const auto seed = integer(j, path, "seed", 1);
  if (seed < 0) throw ConfigError(join(path, "seed"), "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  if (j.contains("piterbarg_S") && !j.at("piterbarg_S").is_null()) {
    c.piterbarg_S = num(j, path, "piterbarg_S");
    if (*c.piterbarg_S < 0.0) throw ConfigError(join(path, "piterbarg_S"), "must be >= 0");
  }
  c.piterbarg_delta = positive(j, path, "piterbarg_delta", c.piterbarg_delta);
  return c;
}

Json constants_to_json(const ConstantsBlock& c) {
  Json j{{"cache", c.cache},       {"pickands_alpha", c.pickands_alpha},
         {"S_list", c.S_list},     {"delta_list", c.delta_list},
         {"n_rep", c.n_rep},       {"seed", c.seed},
         {"piterbarg_delta", c.piterbarg_delta}};
  j["piterbarg_S"] = c.piterbarg_S ? Json(*c.piterbarg_S) : Json(nullptr);
  return j;
}

// Local slope magnitude of a table at knot i (mean of the available sides).
double table_slope(const TableFn& tab, double t) {
  const auto& k = tab.knots;
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i].first != t) continue;
    if (i > 0) {
      sum += std::abs((k[i].second - k[i - 1].second) / (k[i].first - k[i - 1].first));
      ++n;
    }
    if (i + 1 < k.size()) {
      sum += std::abs((k[i + 1].second - k[i].second) / (k[i + 1].first - k[i].first));
      ++n;
    }
  }
  return n ? sum / n : 0.0;
}

SinglePoint point_at(const NamedFunction& h, double t) {
  if (const auto* pp = std::get_if<PowerPeakFn>(&h)) return {t, pp->c, pp->gamma};
  if (const auto* l = std::get_if<LinearFn>(&h)) return {t, std::abs(l->v1), 1.0};
  if (const auto* tab = std::get_if<TableFn>(&h)) return {t, table_slope(*tab, t), 1.0};
  return {t, 0.0, 1.0};
}

asympt::TrendSpec resolve_trend(const ModelConfig& m) {
  asympt::TrendSpec tr;
  const auto& tc = m.trend;
  if (!tc.h) return tr;
  tr.h = to_function(*tc.h);
  const FunctionMax fm = maximize(*tc.h, 0.0, m.T);
  tr.h_m = tc.h_m.value_or(fm.value);
  if (!std::holds_alternative<AutoMaximizer>(tc.maximizer)) {
    std::visit(
        [&](const auto& v) {
          if constexpr (!std::is_same_v<std::decay_t<decltype(v)>, AutoMaximizer>) tr.maximizer = v;
        },
        tc.maximizer);
    return tr;
  }
  if (m.var.form == "local_power") {
    if (fm.on_interval && fm.A == 0.0 && fm.B == m.T) {
      tr.maximizer = SinglePoint{m.var.t0, 0.0, 1.0};
      return tr;
    }
    if (fm.on_interval || fm.argmax.size() != 1)
      throw ConfigError("model.trend.maximizer",
                        "cannot derive a single maximizer at the variance peak; give it explicitly");
    tr.maximizer = point_at(*tc.h, fm.argmax.front());
    return tr;
  }
  if (fm.on_interval) {
    tr.maximizer = Interval{fm.A, fm.B};
  } else if (fm.argmax.size() == 1) {
    tr.maximizer = point_at(*tc.h, fm.argmax.front());
  } else {
    PointSet ps;
    for (double t : fm.argmax) ps.points.push_back(point_at(*tc.h, t));
    tr.maximizer = ps;
  }
  return tr;
}

}  // namespace

Json named_function_to_json(const NamedFunction& f) {
  if (const auto* c = std::get_if<ConstFn>(&f)) return {{"kind", "const"}, {"v", c->v}};
  if (const auto* l = std::get_if<LinearFn>(&f)) return {{"kind", "linear"}, {"v0", l->v0}, {"v1", l->v1}};
  if (const auto* p = std::get_if<PowerPeakFn>(&f))
    return {{"kind", "power_peak"}, {"h_m", p->h_m}, {"c", p->c}, {"t0", p->t0}, {"gamma", p->gamma}};
  Json knots = Json::array();
  for (const auto& [t, v] : std::get<TableFn>(f).knots) knots.push_back({t, v});
  return {{"kind", "table"}, {"knots", knots}};
}

NamedFunction named_function_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  const std::string kind = str(j, path, "kind");
  NamedFunction f;
  if (kind == "const") {
    allow_keys(j, path, {"kind", "v"});
    f = ConstFn{num(j, path, "v")};
  } else if (kind == "linear") {
    allow_keys(j, path, {"kind", "v0", "v1"});
    f = LinearFn{num(j, path, "v0"), num(j, path, "v1")};
  } else if (kind == "power_peak") {
    allow_keys(j, path, {"kind", "h_m", "c", "t0", "gamma"});
    f = PowerPeakFn{num(j, path, "h_m"), num(j, path, "c"), num(j, path, "t0"), num(j, path, "gamma")};
  } else if (kind == "table") {
    allow_keys(j, path, {"kind", "knots"});
    const std::string p = join(path, "knots");
    if (!j.contains("knots") || !j.at("knots").is_array())
      throw ConfigError(p, "expected an array of [t, v] pairs");
    TableFn tab;
    for (std::size_t i = 0; i < j.at("knots").size(); ++i) {
      const auto& kn = j.at("knots")[i];
      if (!kn.is_array() || kn.size() != 2) throw ConfigError(index(p, i), "expected a [t, v] pair");
      tab.knots.emplace_back(as_num(kn[0], index(p, i)), as_num(kn[1], index(p, i)));
    }
    f = tab;
  } else {
    throw ConfigError(join(path, "kind"), "unknown function kind '" + kind +
                                              "' (expected const, linear, power_peak, table)");
  }
  try {
    validate(f);
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
  return f;
}

RunConfig parse_config(const Json& j) {
  allow_keys(j, "", {"model", "run", "constants", "tail"});
  RunConfig c;
  if (!j.contains("model")) throw ConfigError("model", "required field is missing");
  c.model = model_from_json(j.at("model"), "model");
  if (j.contains("run")) c.run = run_from_json(j.at("run"), "run");
  if (j.contains("constants")) c.constants = constants_from_json(j.at("constants"), "constants");
  if (j.contains("tail")) {
    allow_keys(j.at("tail"), "tail", {"x_list"});
    c.tail.x_list = num_list(j.at("tail"), "tail", "x_list", {});
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("", "cannot read config file " + file.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", "malformed JSON in " + file.string() + ": " + e.what());
  }
  RunConfig c = parse_config(j);
  c.base_dir = std::filesystem::absolute(file).parent_path();
  return c;
}

Json to_json(const RunConfig& c) {
  return {{"model", model_to_json(c.model)},
          {"run", run_to_json(c.run)},
          {"constants", constants_to_json(c.constants)},
          {"tail", {{"x_list", c.tail.x_list}}}};
}

homog::HomogeneousSpec homog_spec(const HomogConfig& hc) {
  try {
    homog::HomogeneousSpec g = hc.kind == "product" ? homog::HomogeneousSpec::product(hc.d)
                               : hc.kind == "max"   ? homog::HomogeneousSpec::max(hc.d)
                                                    : homog::HomogeneousSpec::lrho_norm(hc.rho, hc.p, hc.d);
    return hc.scale != 1.0 ? g.scaled(hc.scale) : g;
  } catch (const Error& e) {
    throw ConfigError("model.homog", e.what());
  }
}

asympt::ProcessModel build_model(const ModelConfig& m) {
  try {
    homog::HomogeneousSpec g = homog_spec(m.homog);

    gauss::CorrelationSpec corr;
    if (m.corr.form == "stationary_exp") {
      corr = gauss::StationaryExp{m.corr.a, m.corr.alpha};
    } else if (m.corr.form == "locally_stationary") {
      corr = gauss::LocallyStationary{to_function(m.corr.a_fn), m.corr.alpha};
    } else {
      const auto n = static_cast<Eigen::Index>(m.corr.cov.size());
      Eigen::MatrixXd cov(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k) cov(i, k) = m.corr.cov[i][k];
      corr = gauss::CustomPSDMatrix{cov};
    }

    gauss::VarianceSpec var = gauss::UnitVariance{};
    if (m.var.form == "local_power") var = gauss::LocalPower{m.var.b, m.var.beta, m.var.t0, {}};

    asympt::TrendSpec trend = resolve_trend(m);
    asympt::Location loc = asympt::Location::Boundary;
    if (m.location) {
      loc = *m.location;
    } else {
      std::optional<double> t0;
      if (m.var.form == "local_power") t0 = m.var.t0;
      else if (const auto* sp = std::get_if<SinglePoint>(&trend.maximizer)) t0 = sp->t0;
      if (t0 && *t0 > 0.0 && *t0 < m.T) loc = asympt::Location::Interior;
    }

    auto model = asympt::ProcessModel::build(std::move(g), std::move(corr), std::move(var),
                                             std::move(trend), m.T, loc);
    if (m.corr.form != "matrix") asympt::check_model(model);
    return model;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("model", e.what());
  }
}

// ---- cache -------------------------------------------------------------------

std::filesystem::path cache_path(const RunConfig& c) {
  std::filesystem::path p = c.constants.cache;
  if (const char* env = std::getenv("CHAOSX_CACHE"); env && *env) p = env;
  if (p.is_relative() && !c.base_dir.empty()) p = c.base_dir / p;
  return p;
}

Json key_to_json(const constants::ConstantKey& k) {
  using constants::ConstantKind;
  if (k.kind == ConstantKind::Pickands) return {{"kind", "pickands"}, {"alpha", k.alpha}};
  Json f = nullptr;
  if (const auto* ps = std::get_if<constants::PowerSum>(&k.f))
    f = {{"c_gamma", ps->c_gamma}, {"gamma", ps->gamma}, {"b_beta", ps->b_beta}, {"beta", ps->beta}};
  return {{"kind", "piterbarg"},
          {"alpha", k.alpha},
          {"a", k.a},
          {"f", f},
          {"domain", constants::to_string(k.domain)}};
}

constants::ConstantKey key_from_json(const Json& j, const std::string& path) {
  const std::string kind = str(j, path, "kind");
  const double alpha = num(j, path, "alpha");
  if (kind == "pickands") return constants::ConstantKey::pickands(alpha);
  if (kind != "piterbarg") throw ConfigError(join(path, "kind"), "unknown constant kind '" + kind + "'");
  constants::DriftFunctionSpec f = constants::ZeroDrift{};
  if (j.contains("f") && !j.at("f").is_null()) {
    const auto& fj = j.at("f");
    const std::string fp = join(path, "f");
    require_object(fj, fp);
    f = constants::PowerSum{num(fj, fp, "c_gamma"), num(fj, fp, "gamma"), num(fj, fp, "b_beta"),
                            num(fj, fp, "beta")};
  }
  const std::string dom = str(j, path, "domain");
  if (dom != "half" && dom != "full") throw ConfigError(join(path, "domain"), "expected half or full");
  return constants::ConstantKey::piterbarg(alpha, num(j, path, "a"), f,
                                           dom == "half" ? constants::Domain::HalfLine
                                                         : constants::Domain::FullLine);
}

Json estimate_to_json(const constants::ConstantEstimate& e) {
  Json ladder = Json::array();
  for (const auto& c : e.ladder) ladder.push_back(estimate_to_json(c));
  return {{"value", e.value},     {"std_error", e.std_error},
          {"n_rep", e.n_rep},     {"delta", e.delta},
          {"S", e.S},             {"extrapolated", e.extrapolated},
          {"truncation_bound", e.truncation_bound},
          {"ladder", ladder},     {"warnings", e.warnings}};
}

constants::ConstantEstimate estimate_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  constants::ConstantEstimate e;
  e.value = num(j, path, "value");
  e.std_error = num(j, path, "std_error", 0.0);
  e.n_rep = integer(j, path, "n_rep", 0);
  e.delta = num(j, path, "delta", 0.0);
  e.S = num(j, path, "S", 0.0);
  if (j.contains("extrapolated")) {
    if (!j.at("extrapolated").is_boolean()) throw ConfigError(join(path, "extrapolated"), "expected a boolean");
    e.extrapolated = j.at("extrapolated").get<bool>();
  }
  e.truncation_bound = num(j, path, "truncation_bound", 0.0);
  if (j.contains("ladder")) {
    const auto& l = j.at("ladder");
    if (!l.is_array()) throw ConfigError(join(path, "ladder"), "expected an array");
    for (std::size_t i = 0; i < l.size(); ++i)
      e.ladder.push_back(estimate_from_json(l[i], index(join(path, "ladder"), i)));
  }
  if (j.contains("warnings")) {
    const auto& w = j.at("warnings");
    if (!w.is_array()) throw ConfigError(join(path, "warnings"), "expected an array");
    for (const auto& s : w) {
      if (!s.is_string()) throw ConfigError(join(path, "warnings"), "expected strings");
      e.warnings.push_back(s.get<std::string>());
    }
  }
  return e;
}

ConstantsCache load_cache(const std::filesystem::path& file) {
  ConstantsCache cache;
  if (!std::filesystem::exists(file)) return cache;
  std::ifstream in(file);
  if (!in) throw ConfigError("cache", "cannot read " + file.string());
  try {
    const Json j = Json::parse(in);
    require_object(j, "cache");
    if (str(j, "cache", "format") != "chaosx-constants")
      throw ConfigError("cache.format", "not a chaosx constants cache");
    if (!j.contains("entries") || !j.at("entries").is_array())
      throw ConfigError("cache.entries", "expected an array");
    const auto& entries = j.at("entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const std::string p = index("cache.entries", i);
      const auto& e = entries[i];
      require_object(e, p);
      if (!e.contains("key")) throw ConfigError(join(p, "key"), "required field is missing");
      if (!e.contains("estimate")) throw ConfigError(join(p, "estimate"), "required field is missing");
      const auto key = key_from_json(e.at("key"), join(p, "key"));
      cache.table.put(key, estimate_from_json(e.at("estimate"), join(p, "estimate")));
      if (e.contains("provenance")) cache.provenance[key.to_string()] = e.at("provenance");
    }
  } catch (const Json::exception& e) {
    throw ConfigError("cache", "corrupt cache file " + file.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError("cache", "corrupt cache file " + file.string() + ": " + e.what());
  }
  return cache;
}

void save_cache(const ConstantsCache& cache, const std::filesystem::path& file) {
  Json entries = Json::array();
  for (const auto& [name, entry] : cache.table.entries()) {
    Json e{{"key", key_to_json(entry.key)}, {"name", name}, {"estimate", estimate_to_json(entry.estimate)}};
    if (auto it = cache.provenance.find(name); it != cache.provenance.end()) e["provenance"] = it->second;
    entries.push_back(std::move(e));
  }
  const Json j{{"format", "chaosx-constants"}, {"version", 1}, {"entries", entries}};
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  const auto tmp = std::filesystem::path(file.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cache", "cannot write " + tmp.string());
    out << j.dump(2) << '\n';
    if (!out) throw ConfigError("cache", "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

}  // namespace chaosx::cli
