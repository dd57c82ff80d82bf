#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace oedkit {

// Parsed and validated CLI configuration. Every numeric field is checked
// against the module preconditions before any compute starts; validation
// failures enumerate all invalid fields at once.
struct RunConfig {
  struct GridSection {
    int nx = 16, ny = 16;
    double lx = 1.0, ly = 1.0;
  } grid;

  struct PriorSection {
    // kind "field": Laplacian-like precision prior on the grid.
    // kind "dense": explicit covariance, for small linear oracle instances.
    std::string kind = "field";
    double gamma = 0.1;
    double delta = 1.0;
    double mean = 0.0;                      // constant field mean
    std::vector<std::vector<double>> cov;   // dense kind
    std::vector<double> mean_vector;        // dense kind, optional
  } prior;

  struct SensorSpec {
    bool from_grid = true;
    double x0 = 0.1, y0 = 0.1, dx = 0.2, dy = 0.2;
    int count_x = 5, count_y = 5;
    std::vector<std::array<double, 2>> coords;  // explicit list
  };

  struct ModelSection {
    std::string kind = "adr";  // linear | elliptic | adr
    double k = 0.01;
    double v0 = 30.0;
    std::vector<std::vector<double>> g;  // linear kind
    std::vector<double> g_diag;          // linear kind shortcut
    std::vector<double> offset;          // linear kind, optional
    SensorSpec sensors;
  } model;

  struct NoiseSection {
    std::vector<double> sigma;  // scalar broadcast or per-sensor list
    bool present = false;
  } noise;

  struct ReductionSection {
    int r_m = 15;
    int r_f = 15;
    std::optional<double> energy;  // overrides r_m/r_f when set
    int n_samples_as = 128;
    int n_samples_pod = 256;
  } reduction;

  struct NetworkSection {
    int breadth = 15;
    int depth = 8;
    int layer_rank = 5;
    std::string activation = "tanh";
    bool adaptive = false;
  } network;

  struct TrainingSection {
    int epochs = 500;
    int batch = 32;
    double lr = 1e-3;
    int patience = 20;
    double split = 0.8;
  } training;

  struct EigSection {
    int n_out = 100;
    int n_in = 1000;
    std::string inner_mode = "fresh";  // fresh | shared-bank
    std::string evaluator = "true";    // true | surrogate
    std::vector<int> design;           // design indices for estimate-eig
  } eig;

  struct GreedySection {
    int r = 3;
  } greedy;

  struct DataSection {
    int n_samples = 512;
    int n_test = 128;
  } data;

  struct VerifySection {
    int n_designs = 10;
    int n_test = 128;
    std::vector<int> breadths = {5, 10, 15};
  } verify;

  int sample_count = 4;  // sample-prior output count
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output_dir = "out";
};

// Parses JSON text, applies dotted-path overrides ("eig.n_out=500"), then
// validates. Throws ConfigError listing every invalid field.
RunConfig parse_run_config(const std::string& json_text,
                           const std::vector<std::string>& overrides = {});
RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides = {});

}  // namespace oedkit
