#include "chaosx/commands.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "chaosx/config.hpp"
#include "chaosx/errors.hpp"
#include "chaosx/report.hpp"

namespace chaosx::cli {

namespace {

using Body = std::function<int(std::ostream& csv)>;

// Collects the CSV in memory and writes it once, so a failed command leaves
// no partial file behind.
int emit(const CommandOptions& opts, std::ostream& out, const std::string& csv) {
  if (!opts.out) {
    out << csv;
    return kExitOk;
  }
  std::ofstream f(*opts.out, std::ios::binary);
  if (!f) throw ConfigError("--out", "cannot write " + opts.out->string());
  f << csv;
  return kExitOk;
}

int guarded(const CommandOptions& opts, std::ostream& out, std::ostream& err, const Body& body) {
  try {
    std::ostringstream csv;
    const int code = body(csv);
    if (code != kExitConfig && code != kExitMissingCache) emit(opts, out, csv.str());
    return code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DependencyError& e) {
    err << "missing constant " << e.key() << "; run `chaosx constants --config "
        << opts.config.string() << "` first\n";
    return kExitMissingCache;
  } catch (const ApplicabilityError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const RangeError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PreconditionError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

void warn(std::ostream& err, const std::vector<std::string>& ws, const std::string& context) {
  for (const auto& w : ws) err << "warning: " << context << ": " << w << '\n';
}

bool has_asymptotics(const RunConfig& c) { return c.model.corr.form != "matrix"; }

// Returns false (after printing the keys) when the cache lacks a constant.
bool check_cache(const asympt::ProcessModel& m, const constants::ConstantTable& table,
                 const CommandOptions& opts, std::ostream& err) {
  bool ok = true;
  for (const auto& k : asympt::required_constants(m)) {
    if (table.contains(k)) continue;
    err << "missing constant " << k.to_string() << " in the cache; run `chaosx constants --config "
        << opts.config.string() << "` first\n";
    ok = false;
  }
  return ok;
}

const std::vector<double>& need_u_list(const RunConfig& c) {
  if (c.run.u_list.empty()) throw ConfigError("run.u_list", "needs at least one threshold");
  return c.run.u_list;
}

}  // namespace

int cmd_constants(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(opts, out, err, [&](std::ostream& csv) {
    const RunConfig cfg = load_config(opts.config);
    const auto path = cache_path(cfg);
    ConstantsCache cache = load_cache(path);

    std::vector<constants::ConstantKey> keys;
    for (double a : cfg.constants.pickands_alpha) keys.push_back(constants::ConstantKey::pickands(a));
    if (has_asymptotics(cfg)) {
      const auto model = build_model(cfg.model);
      for (const auto& k : asympt::required_constants(model)) keys.push_back(k);
    }

    const auto& cc = cfg.constants;
    const constants::RunOptions run{cc.n_rep, cc.seed, cfg.run.threads};
    csv << report::kConstantsHeader << '\n';
    std::vector<std::string> done;
    for (const auto& key : keys) {
      const std::string name = key.to_string();
      if (std::find(done.begin(), done.end(), name) != done.end()) continue;
      done.push_back(name);
      if (opts.force || !cache.table.contains(key)) {
        constants::ConstantEstimate est;
        Json prov{{"n_rep", cc.n_rep}, {"seed", cc.seed}};
        if (key.kind == constants::ConstantKind::Pickands) {
          est = constants::pickands(key.alpha, {cc.S_list, cc.delta_list, run});
          prov["S_list"] = cc.S_list;
          prov["delta_list"] = cc.delta_list;
        } else {
          est = constants::piterbarg(key.alpha, key.a, key.f, key.domain,
                                     {cc.piterbarg_S, cc.piterbarg_delta, run});
          prov["S"] = cc.piterbarg_S ? Json(*cc.piterbarg_S) : Json("auto");
          prov["delta"] = cc.piterbarg_delta;
        }
        cache.table.put(key, est);
        cache.provenance[name] = prov;
        err << "estimated " << name << " = " << report::number(est.value) << " (se "
            << report::number(est.std_error) << ")\n";
      }
      const auto& est = cache.table.require(key);
      warn(err, est.warnings, name);
      csv << report::constants_row(key, est) << '\n';
    }
    save_cache(cache, path);
    return kExitOk;
  });
}

int cmd_asymptotic(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(opts, out, err, [&](std::ostream& csv) {
    const RunConfig cfg = load_config(opts.config);
    if (!has_asymptotics(cfg))
      throw ConfigError("model.corr", "an explicit covariance matrix has no asymptotic formula");
    const auto model = build_model(cfg.model);
    const auto& us = need_u_list(cfg);
    const ConstantsCache cache = load_cache(cache_path(cfg));
    if (!check_cache(model, cache.table, opts, err)) return static_cast<int>(kExitMissingCache);
    csv << report::kAsymptoticHeader << '\n';
    for (std::size_t i = 0; i < us.size(); ++i) {
      try {
        csv << report::asymptotic_row(asympt::evaluate(model, us[i], cache.table)) << '\n';
      } catch (const RangeError& e) {
        throw ConfigError("run.u_list[" + std::to_string(i) + "]", e.what());
      }
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_validate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(opts, out, err, [&](std::ostream& csv) {
    const RunConfig cfg = load_config(opts.config);
    const auto model = build_model(cfg.model);
    const auto& us = need_u_list(cfg);
    const ConstantsCache cache = load_cache(cache_path(cfg));
    if (has_asymptotics(cfg) && !check_cache(model, cache.table, opts, err))
      return static_cast<int>(kExitMissingCache);
    if (cfg.run.n_samples < 1000)
      throw ConfigError("run.n_samples", "must be at least 1000, got " + std::to_string(cfg.run.n_samples));

    const mc::McOptions mo{cfg.run.grid_step, cfg.run.n_samples, cfg.run.seed, cfg.run.threads};
    const auto rows = mc::compare(model, us, mo, cache.table);
    csv << report::kValidateHeader << '\n';
    bool any_hits = false, under = false;
    for (const auto& r : rows) {
      csv << report::validate_row(r) << '\n';
      warn(err, r.mc.warnings, "u=" + report::number(r.u));
      any_hits |= r.mc.hits > 0;
      for (const auto& w : r.mc.warnings) under |= w.rfind("under-powered", 0) == 0;
    }
    if (opts.svg) {
      std::ofstream f(*opts.svg, std::ios::binary);
      if (!f) throw ConfigError("--svg", "cannot write " + opts.svg->string());
      f << report::ratio_svg(rows, opts.log_y);
    }
    if (!any_hits) {
      err << "no exceedances at any u; increase run.n_samples or lower run.u_list\n";
      return static_cast<int>(kExitUnderPowered);
    }
    if (under) {
      err << "run is under-powered (fewer than 10 expected hits at some u)\n";
      return static_cast<int>(kExitUnderPowered);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_tail(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(opts, out, err, [&](std::ostream& csv) {
    const RunConfig cfg = load_config(opts.config);
    const auto& xs = cfg.tail.x_list.empty() ? cfg.run.u_list : cfg.tail.x_list;
    if (xs.empty()) throw ConfigError("tail.x_list", "needs at least one point");
    const auto g = homog_spec(cfg.model.homog);
    const auto analysis = homog::analyze_sphere(g);
    const double floor = homog::validity_floor(analysis, g.p());
    csv << report::kTailHeader << '\n';
    for (double x : xs) {
      if (x >= floor)
        csv << report::tail_row(x, homog::tail_asympt(analysis, g.p(), x),
                                homog::pdf_asympt(analysis, g.p(), x))
            << '\n';
      else
        csv << report::tail_row(x, std::nullopt, std::nullopt) << '\n';
    }
    return static_cast<int>(kExitOk);
  });
}

int run_command(const std::string& name, const CommandOptions& opts, std::ostream& out,
                std::ostream& err) {
  if (name == "constants") return cmd_constants(opts, out, err);
  if (name == "asymptotic") return cmd_asymptotic(opts, out, err);
  if (name == "validate") return cmd_validate(opts, out, err);
  if (name == "tail") return cmd_tail(opts, out, err);
  err << "unknown command '" << name << "' (expected constants, asymptotic, validate, tail)\n";
  return kExitConfig;
}

}  // namespace chaosx::cli
