#pragma once

// The four subcommands of the chaosx tool. Each returns a process exit code
// and never throws.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace chaosx::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitMissingCache = 3,
  kExitUnderPowered = 4,
};

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  // CSV destination; stdout otherwise
  std::optional<std::filesystem::path> svg;
  bool force = false;  // re-estimate cached constants
  bool log_y = false;  // log-scale SVG ratio axis
};

int cmd_constants(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_asymptotic(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_validate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_tail(const CommandOptions& opts, std::ostream& out, std::ostream& err);

// Dispatch by name: constants | asymptotic | validate | tail.
int run_command(const std::string& name, const CommandOptions& opts, std::ostream& out,
                std::ostream& err);

}  // namespace chaosx::cli
