#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "chaosx/commands.hpp"
#include "chaosx/config.hpp"
#include "chaosx/errors.hpp"
#include "chaosx/report.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace chaosx;
using namespace chaosx::cli;

namespace {

const char* kChi = R"({
  "model": {
    "homog": {"kind": "lrho_norm", "rho": 2, "p": 2, "d": 2},
    "corr": {"form": "stationary_exp", "a": 1, "alpha": 1},
    "T": 1
  },
  "run": {"u_list": [8, 10], "n_samples": 5000, "seed": 7},
  "constants": {"cache": "cache.json", "n_rep": 400, "S_list": [8, 16], "delta_list": [0.2, 0.1]},
  "tail": {"x_list": [2, 10, 16]}
})";

// Scratch directory removed at scope exit.
struct Scratch {
  fs::path dir;
  Scratch() {
    static int counter = 0;
    dir = fs::temp_directory_path() /
          ("chaosx_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return dir / name;
  }
  std::string read(const std::string& name) const {
    std::ifstream in(dir / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::string& cmd, const fs::path& config, CommandOptions extra = {}) {
  extra.config = config;
  std::ostringstream out, err;
  const int code = run_command(cmd, extra, out, err);
  return {code, out.str(), err.str()};
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

int lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

Json chi_json() { return Json::parse(kChi); }

}  // namespace

TEST_CASE("csv headers are byte-stable") {
  Scratch s;
  const auto cfg = s.write("chi.json", kChi);
  const auto c = run("constants", cfg);
  REQUIRE(c.code == 0);
  CHECK(first_line(c.out) == "alpha,a,f,domain,S,delta,n_rep,estimate,std_error,extrapolated");
  const auto a = run("asymptotic", cfg);
  REQUIRE(a.code == 0);
  CHECK(first_line(a.out) == "u,value,regime,alpha_star,beta_star,H_alpha,P_const,integral,h0");
  CHECK(lines(a.out) == 3);
  const auto v = run("validate", cfg);
  REQUIRE(v.code == 0);
  CHECK(first_line(v.out) == "u,p_hat,ci_low,ci_high,n,hits,grid_step,asympt,ratio,regime,seed");
  const auto t = run("tail", cfg);
  REQUIRE(t.code == 0);
  CHECK(first_line(t.out) == "x,tail,pdf,status");
  for (const auto* out : {&c.out, &a.out, &v.out, &t.out}) {
    CHECK(out->find('\r') == std::string::npos);
    CHECK(out->back() == '\n');
  }
}

TEST_CASE("tail table") {
  Scratch s;
  const auto t = run("tail", s.write("chi.json", kChi));
  REQUIRE(t.code == 0);
  std::istringstream in(t.out);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "2,,,invalid");
  std::getline(in, line);
  CHECK(line.rfind("10,0.00673794", 0) == 0);
  CHECK(line.substr(line.rfind(',') + 1) == "ok");
}

TEST_CASE("repeated runs give identical csv") {
  Scratch s1, s2;
  const auto c1 = s1.write("chi.json", kChi);
  const auto c2 = s2.write("chi.json", kChi);
  for (const char* cmd : {"constants", "asymptotic", "validate", "tail"}) {
    const auto a = run(cmd, c1);
    const auto b = run(cmd, c2);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(run(cmd, c1).out == a.out);
  }
  // The cache file is itself reproducible.
  CHECK(s1.read("cache.json") == s2.read("cache.json"));
}

TEST_CASE("exit codes") {
  Scratch s;
  const auto cfg = s.write("chi.json", kChi);

  // Missing constant.
  auto r = run("asymptotic", cfg);
  CHECK(r.code == 3);
  CHECK(r.err.find("pickands(alpha=1)") != std::string::npos);
  CHECK(r.out.empty());
  CHECK(run("validate", cfg).code == 3);

  // Malformed config names the field.
  auto j = chi_json();
  j["model"]["corr"]["alpha"] = 3;
  r = run("asymptotic", s.write("bad.json", j.dump()));
  CHECK(r.code == 2);
  CHECK(r.err.find("model.corr.alpha") != std::string::npos);
  j = chi_json();
  j["model"]["homog"]["knd"] = "max";
  r = run("tail", s.write("bad2.json", j.dump()));
  CHECK(r.code == 2);
  CHECK(r.err.find("model.homog.knd") != std::string::npos);
  CHECK(run("tail", s.write("bad3.json", "{\"model\": ")).code == 2);
  CHECK(run("tail", s.dir / "absent.json").code == 2);
  CHECK(run("bogus", cfg).code == 2);

  // Zero hits everywhere.
  REQUIRE(run("constants", cfg).code == 0);
  j = chi_json();
  j["run"]["u_list"] = {60, 80};
  j["run"]["n_samples"] = 1000;
  r = run("validate", s.write("far.json", j.dump()));
  CHECK(r.code == 4);
  CHECK(r.err.find("n_samples") != std::string::npos);
  CHECK(lines(r.out) == 3);

  // Below the validity floor the asymptotic command refuses.
  j = chi_json();
  j["run"]["u_list"] = {1};
  r = run("asymptotic", s.write("low.json", j.dump()));
  CHECK(r.code == 2);
  CHECK(r.err.find("run.u_list[0]") != std::string::npos);
}

TEST_CASE("constants cache") {
  Scratch s;
  const auto cfg = s.write("chi.json", kChi);
  REQUIRE(run("constants", cfg).code == 0);
  REQUIRE(fs::exists(s.dir / "cache.json"));

  // Reuse without re-estimation: a doctored value survives.
  auto cache = load_cache(s.dir / "cache.json");
  const auto key = constants::ConstantKey::pickands(1.0);
  const double original = cache.table.require(key).value;
  auto doctored = cache.table.require(key);
  doctored.value = 42.0;
  cache.table.put(key, doctored);
  save_cache(cache, s.dir / "cache.json");
  auto r = run("constants", cfg);
  CHECK(r.out.find(",42,") != std::string::npos);
  CHECK(run("asymptotic", cfg).out.find(",42,") != std::string::npos);

  // --force re-estimates and overwrites.
  r = run("constants", cfg, {.force = true});
  CHECK(r.code == 0);
  CHECK(load_cache(s.dir / "cache.json").table.require(key).value == original);
  CHECK(load_cache(s.dir / "cache.json").provenance.count(key.to_string()) == 1);

  // Corrupt file.
  s.write("cache.json", "{\"format\": \"chaosx-constants\", \"entries\": [{\"key\": 1}]}");
  CHECK(run("asymptotic", cfg).code == 2);
  s.write("cache.json", "not json");
  r = run("constants", cfg);
  CHECK(r.code == 2);
  CHECK(r.err.find("corrupt") != std::string::npos);

  // Environment override.
  const auto elsewhere = s.dir / "sub" / "other.json";
  ::setenv("CHAOSX_CACHE", elsewhere.c_str(), 1);
  r = run("constants", cfg);
  ::unsetenv("CHAOSX_CACHE");
  CHECK(r.code == 0);
  CHECK(fs::exists(elsewhere));
}

TEST_CASE("piterbarg dependency is named") {
  Scratch s;
  auto j = chi_json();
  // Max d=2 (p=1), alpha=1, variance beta=1, trend gamma=0.5: beta* = alpha*.
  j["model"]["homog"] = {{"kind", "max"}, {"d", 2}};
  j["model"]["var"] = {{"form", "local_power"}, {"b", 1}, {"beta", 1}, {"t0", 0}};
  j["model"]["trend"] = {{"h", {{"kind", "power_peak"}, {"h_m", 0}, {"c", 1}, {"t0", 0}, {"gamma", 0.5}}}};
  const auto cfg = s.write("pit.json", j.dump());
  const auto r = run("asymptotic", cfg);
  CHECK(r.code == 3);
  CHECK(r.err.find("piterbarg(alpha=1,a=1,f=1*t^0.5+1*t^1,domain=half)") != std::string::npos);
}

TEST_CASE("config round trip") {
  auto j = chi_json();
  j["model"]["corr"] = {{"form", "locally_stationary"},
                        {"alpha", 1.5},
                        {"a", {{"kind", "table"}, {"knots", {{0, 1}, {0.5, 2}, {1, 1.5}}}}}};
  j["model"]["trend"] = {{"h", {{"kind", "linear"}, {"v0", 0.1}, {"v1", -0.25}}},
                         {"maximizer", {{"kind", "point"}, {"t0", 0}, {"c", 0.25}, {"gamma", 1}}}};
  j["model"]["t0_location"] = "boundary";
  j["run"]["grid_step"] = 0.001;
  j["constants"]["piterbarg_S"] = 8;
  const RunConfig a = parse_config(j);
  const Json once = to_json(a);
  const Json twice = to_json(parse_config(once));
  CHECK(once == twice);
  CHECK(once["run"]["grid_step"] == 0.001);
  CHECK(to_json(parse_config(chi_json()))["run"]["grid_step"] == "auto");
  CHECK(once["model"]["trend"]["h"]["v1"] == -0.25);
}

TEST_CASE("trend maximizer derived from h") {
  auto base = parse_config(chi_json());
  base.model.homog = {.kind = "max", .p = 1, .d = 2};

  auto m = base.model;
  m.trend.h = PowerPeakFn{0.5, 2.0, 0.3, 1.5};
  auto model = build_model(m);
  const auto* sp = std::get_if<asympt::SinglePoint>(&model.trend.maximizer);
  REQUIRE(sp);
  CHECK(sp->t0 == 0.3);
  CHECK(sp->c == 2.0);
  CHECK(sp->gamma == 1.5);
  CHECK(model.trend.h_m == 0.5);
  CHECK(model.t0_location == asympt::Location::Interior);

  m.trend.h = TableFn{{{0.0, 0.0}, {0.2, 1.0}, {0.7, 1.0}, {1.0, 0.0}}};
  model = build_model(m);
  const auto* iv = std::get_if<asympt::Interval>(&model.trend.maximizer);
  REQUIRE(iv);
  CHECK(iv->A == 0.2);
  CHECK(iv->B == 0.7);

  m.trend.h = TableFn{{{0.0, 0.4}, {0.3, 1.0}, {0.5, 0.6}, {0.7, 1.0}, {1.0, 0.4}}};
  model = build_model(m);
  const auto* ps = std::get_if<asympt::PointSet>(&model.trend.maximizer);
  REQUIRE(ps);
  CHECK(ps->points.size() == 2);

  // Asymmetric kink fails the fit check at load time.
  m.trend.h = TableFn{{{0.0, 0.0}, {0.3, 1.0}, {1.0, 0.0}}};
  CHECK_THROWS_AS(build_model(m), ConfigError);
}

TEST_CASE("svg document") {
  Scratch s;
  const auto cfg = s.write("chi.json", kChi);
  REQUIRE(run("constants", cfg).code == 0);
  const auto svg = s.dir / "ratio.svg";
  REQUIRE(run("validate", cfg, {.svg = svg}).code == 0);
  const std::string doc = s.read("ratio.svg");
  CHECK(doc.rfind("<?xml", 0) == 0);
  CHECK(doc.find("<svg") != std::string::npos);
  CHECK(doc.size() > 7);
  CHECK(doc.substr(doc.size() - 7) == "</svg>\n");
  int circles = 0;
  for (auto p = doc.find("<circle"); p != std::string::npos; p = doc.find("<circle", p + 1)) ++circles;
  CHECK(circles == 2);
  CHECK(doc.find("stroke-dasharray") != std::string::npos);
  REQUIRE(run("validate", cfg, {.svg = svg, .log_y = true}).code == 0);
  CHECK(s.read("ratio.svg").find("log scale") != std::string::npos);
}

TEST_CASE("out file and the executable") {
  Scratch s;
  const auto cfg = s.write("chi.json", kChi);
  const auto r = run("tail", cfg, {.out = s.dir / "t.csv"});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  CHECK(first_line(s.read("t.csv")) == "x,tail,pdf,status");

  const std::string bin = CHAOSX_BIN;
  auto status = [](const std::string& cmd) {
    const int st = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(st);
  };
  CHECK(status(bin + " tail --config " + cfg.string()) == 0);
  CHECK(status(bin + " asymptotic --config " + cfg.string()) == 3);
  CHECK(status(bin + " tail") == 2);
  CHECK(status(bin + " nonsense --config " + cfg.string()) == 2);
  CHECK(status(bin + " --help") == 0);
}
