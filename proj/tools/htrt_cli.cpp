#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "htrt/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"htrt: 1D grey thermal radiative transfer benchmarks"};
  app.require_subcommand(1);

  htrt::CommandOptions options;
  app.add_option("--output-dir", options.output_dir, "Directory for CSV/JSON output");
  app.add_option("--jobs", options.jobs,
                 "Worker threads for sweeps and suites (0 = hardware threads)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--override", options.overrides,
                 "Override a config field, key=value (repeatable)");
  app.add_flag("--quiet", options.quiet, "Suppress progress output");

  std::string path;
  auto* run = app.add_subcommand("run", "Run one configuration");
  run->add_option("config", path, "JSON config")->required();
  auto* convergence =
      app.add_subcommand("convergence", "Self-convergence sweep of a configuration");
  convergence->add_option("config", path, "JSON config")->required();
  auto* suite = app.add_subcommand("suite", "Run every JSON config in a directory");
  suite->add_option("dir", path, "Config directory")->required();

  for (auto* sub : {run, convergence, suite}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return htrt::kExitConfig;
  }

  if (*run) return htrt::command_run(path, options);
  if (*convergence) return htrt::command_convergence(path, options);
  return htrt::command_suite(path, options);
}
