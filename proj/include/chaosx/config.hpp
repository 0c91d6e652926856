#pragma once

// JSON run configuration and the file-backed constants cache.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "chaosx/asympt.hpp"
#include "chaosx/constants.hpp"
#include "chaosx/named_function.hpp"

namespace chaosx::cli {

using Json = nlohmann::json;

struct HomogConfig {
  std::string kind = "lrho_norm";  // lrho_norm | product | max
  double rho = 2;
  double p = 2;
  int d = 2;
  double scale = 1;
};

struct CorrConfig {
  std::string form = "stationary_exp";  // stationary_exp | locally_stationary | matrix
  double alpha = 1;
  double a = 1;                       // stationary_exp
  NamedFunction a_fn = ConstFn{1.0};  // locally_stationary
  std::vector<std::vector<double>> cov;
};

struct VarConfig {
  std::string form = "unit";  // unit | local_power
  double b = 1;
  double beta = 2;
  double t0 = 0;
};

// Derive the maximizer from h (exact for the named-function kinds).
struct AutoMaximizer {};
using MaximizerConfig =
    std::variant<AutoMaximizer, asympt::SinglePoint, asympt::PointSet, asympt::Interval>;

struct TrendConfig {
  std::optional<NamedFunction> h;  // empty: h = 0, no trend
  MaximizerConfig maximizer = AutoMaximizer{};
  std::optional<double> h_m;  // default: exact maximum of h on [0, T]
};

struct ModelConfig {
  HomogConfig homog;
  CorrConfig corr;
  VarConfig var;
  TrendConfig trend;
  double T = 1;
  // Default: interior when t0 (variance peak or single trend maximizer) lies
  // strictly inside (0, T).
  std::optional<asympt::Location> location;
};

struct RunBlock {
  std::vector<double> u_list;
  std::int64_t n_samples = 100000;
  std::optional<double> grid_step;  // empty: auto
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

struct ConstantsBlock {
  std::string cache = "chaosx_cache.json";
  std::vector<double> pickands_alpha;  // estimated in addition to the model's needs
  std::vector<double> S_list{32, 64, 128};
  std::vector<double> delta_list{0.2, 0.1, 0.05};
  int n_rep = 20000;
  std::uint64_t seed = 1;
  std::optional<double> piterbarg_S;
  double piterbarg_delta = 0.01;
};

struct TailBlock {
  std::vector<double> x_list;
};

struct RunConfig {
  ModelConfig model;
  RunBlock run;
  ConstantsBlock constants;
  TailBlock tail;
  std::filesystem::path base_dir;  // directory of the config file; not serialized
};

// Throws ConfigError carrying the JSON path of the offending field.
RunConfig parse_config(const Json& j);
RunConfig load_config(const std::filesystem::path& file);
Json to_json(const RunConfig& c);

Json named_function_to_json(const NamedFunction& f);
NamedFunction named_function_from_json(const Json& j, const std::string& path);

homog::HomogeneousSpec homog_spec(const HomogConfig& h);

// Builds the model and runs the asymptotic applicability checks (skipped for
// an explicit covariance matrix, which only Monte Carlo can use). Failures
// are ConfigError at "model".
asympt::ProcessModel build_model(const ModelConfig& m);

// ---- constants cache --------------------------------------------------------

struct ConstantsCache {
  constants::ConstantTable table;
  std::map<std::string, Json> provenance;  // by key string
};

// CHAOSX_CACHE overrides the configured path; relative paths are resolved
// against the config file's directory.
std::filesystem::path cache_path(const RunConfig& c);
// A missing file is an empty cache; a corrupt one throws ConfigError.
ConstantsCache load_cache(const std::filesystem::path& file);
void save_cache(const ConstantsCache& cache, const std::filesystem::path& file);

Json key_to_json(const constants::ConstantKey& k);
constants::ConstantKey key_from_json(const Json& j, const std::string& path);
Json estimate_to_json(const constants::ConstantEstimate& e);
constants::ConstantEstimate estimate_from_json(const Json& j, const std::string& path);

}  // namespace chaosx::cli
