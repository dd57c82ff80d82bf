#pragma once

#include <memory>
#include <string>
#include <vector>

#include "oedkit/eig.hpp"
#include "oedkit/forward_models.hpp"
#include "oedkit/prior.hpp"
#include "oedkit/run_config.hpp"

namespace oedkit {

// Model, prior, and noise assembled from a validated configuration.
struct BuiltProblem {
  Grid grid;
  std::unique_ptr<GaussianSampler> prior;
  std::unique_ptr<ObservableMap> map;
  std::unique_ptr<NoiseModel> noise;
};

BuiltProblem build_problem(const RunConfig& cfg);

// Runs one pipeline subcommand; writes artifacts under cfg.output_dir and
// prints a one-line summary to stdout. Valid names: sample-prior, gen-data,
// build-bases, train, estimate-eig, greedy, verify, oracle.
void run_subcommand(const std::string& name, const RunConfig& cfg);

const std::vector<std::string>& subcommand_names();

}  // namespace oedkit
