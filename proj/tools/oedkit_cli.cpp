// Command line front end for the sensor placement toolkit.
//
// Usage: oedkit <subcommand> --config <path> [--set section.field=value]...
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 I/O error.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "oedkit/errors.hpp"
#include "oedkit/pipeline.hpp"
#include "oedkit/run_config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bayesian sensor placement toolkit: expected information gain "
               "estimation with a projected ResNet surrogate"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;

  for (const std::string& name : oedkit::subcommand_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--set", overrides,
                    "dotted-path override, e.g. eig.n_out=500 (repeatable)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const oedkit::RunConfig cfg = oedkit::load_run_config(config_path, overrides);
    oedkit::run_subcommand(command, cfg);
    return 0;
  } catch (const oedkit::ConfigError& e) {
    std::fprintf(stderr, "%s: %s\n", command.c_str(), e.what());
    return 2;
  } catch (const oedkit::NumericalError& e) {
    std::fprintf(stderr, "%s: %s\n", command.c_str(), e.what());
    return 3;
  } catch (const oedkit::IoError& e) {
    std::fprintf(stderr, "%s: %s\n", command.c_str(), e.what());
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "%s: %s\n", command.c_str(), e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: internal error: %s\n", command.c_str(), e.what());
    return 1;
  }
}
