#include <iostream>

#include <CLI11.hpp>

#include "chaosx/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Tail asymptotics, constants and Monte Carlo checks for Gaussian chaos processes"};
  app.require_subcommand(1);

  chaosx::cli::CommandOptions opts;
  std::string config, out, svg;
  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON run configuration")->required();
    sub->add_option("--out", out, "write the CSV here instead of stdout");
    return sub;
  };
  auto* constants = add("constants", "estimate Pickands/Piterbarg constants into the cache");
  constants->add_flag("--force", opts.force, "re-estimate constants already in the cache");
  add("asymptotic", "evaluate the asymptotic tail formula for each u");
  auto* validate = add("validate", "compare Monte Carlo estimates with the asymptotics");
  validate->add_option("--svg", svg, "write a ratio plot");
  validate->add_flag("--log-y", opts.log_y, "log-scale ratio axis in the plot");
  add("tail", "tail and density asymptotics of g(xi)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : chaosx::cli::kExitConfig;
  }

  opts.config = config;
  if (!out.empty()) opts.out = out;
  if (!svg.empty()) opts.svg = svg;
  return chaosx::cli::run_command(app.get_subcommands().front()->get_name(), opts, std::cout,
                                  std::cerr);
}
