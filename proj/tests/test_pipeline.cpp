#include <doctest.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <string>

#include "oedkit/errors.hpp"
#include "oedkit/pipeline.hpp"
#include "oedkit/projected_resnet.hpp"
#include "test_support.hpp"

using namespace oedkit;

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  return nlohmann::json::parse(f);
}

std::string read_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::string(std::istreambuf_iterator<char>(f), {});
}

const char* kOracleConfig = R"({
  "model": {"kind": "linear", "g": [[3.0]]},
  "prior": {"kind": "dense", "cov": [[1.0]]},
  "noise": {"sigma": 1.0},
  "eig": {"n_out": 400, "n_in": 20000, "design": [0]},
  "greedy": {"r": 2},
  "seed": 21,
  "threads": 2
})";

const char* kDiagConfig = R"({
  "model": {"kind": "linear", "g_diag": [3.0, 2.0, 1.0]},
  "prior": {"kind": "dense", "cov": [[1,0,0],[0,1,0],[0,0,1]]},
  "noise": {"sigma": 1.0},
  "eig": {"n_out": 200, "n_in": 4000},
  "greedy": {"r": 2},
  "seed": 5,
  "threads": 2
})";

}  // namespace

TEST_CASE("estimate-eig on the 1-d linear oracle config") {
  test::TempDir dir("cli_eig");
  RunConfig cfg = parse_run_config(kOracleConfig, {"output_dir=\"" + dir.file("out") + "\""});
  run_subcommand("estimate-eig", cfg);

  const nlohmann::json eig = read_json(dir.file("out") + "/eig.json");
  const double value = eig["value"].get<double>();
  const double stderr_value = eig["stderr"].get<double>();
  CHECK(std::abs(value - 1.151292546497023) <= 3.0 * stderr_value);
  CHECK(eig["evaluator_kind"] == "true");
  CHECK(eig["design_indices"] == nlohmann::json::array({0}));

  const nlohmann::json manifest = read_json(dir.file("out") + "/manifest.json");
  CHECK(manifest["command"] == "estimate-eig");
  CHECK(manifest["pde_solves"]["forward"] == 0);  // linear model, no PDE
}

TEST_CASE("greedy on the diagonal oracle config picks the top two sensors") {
  test::TempDir dir("cli_greedy");
  RunConfig cfg = parse_run_config(kDiagConfig, {"output_dir=\"" + dir.file("out") + "\""});
  run_subcommand("greedy", cfg);

  const nlohmann::json greedy = read_json(dir.file("out") + "/greedy.json");
  CHECK(greedy["indices"] == nlohmann::json::array({0, 1}));
  CHECK(greedy["per_step_eig"].size() == 2);
  const double step0 = greedy["per_step_eig"][0].get<double>();
  const double step1 = greedy["per_step_eig"][1].get<double>();
  CHECK(step1 >= step0);
}

TEST_CASE("oracle subcommand reports the exhaustive optimum") {
  test::TempDir dir("cli_oracle");
  RunConfig cfg = parse_run_config(
      kDiagConfig, {"output_dir=\"" + dir.file("out") + "\"", "eig.design=[0,1]"});
  run_subcommand("oracle", cfg);

  const nlohmann::json oracle = read_json(dir.file("out") + "/oracle.json");
  CHECK(oracle["exhaustive_indices"] == nlohmann::json::array({0, 1}));
  // 1/2 logdet(diag(10, 5)) = 1/2 (ln 10 + ln 5)
  CHECK(oracle["exhaustive_eig"].get<double>() ==
        doctest::Approx(0.5 * (std::log(10.0) + std::log(5.0))).epsilon(1e-12));
  CHECK(oracle["design_eig"].get<double>() ==
        doctest::Approx(0.5 * (std::log(10.0) + std::log(5.0))).epsilon(1e-12));
}

TEST_CASE("missing sigma fails validation before any compute") {
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"kind": "linear", "g": [[1.0]]}})"),
                  ConfigError);
}

TEST_CASE("sample-prior, gen-data, build-bases, train round-trip on a small model") {
  test::TempDir dir("cli_pipe");
  const std::string config = R"({
    "grid": {"nx": 10, "ny": 10},
    "prior": {"gamma": 0.1, "delta": 1.0},
    "model": {"kind": "elliptic",
              "sensors": {"x0": 0.25, "y0": 0.25, "dx": 0.25, "dy": 0.25,
                           "count_x": 3, "count_y": 3}},
    "noise": {"sigma": 0.01},
    "reduction": {"r_m": 6, "r_f": 6, "n_samples_as": 12, "n_samples_pod": 24},
    "network": {"breadth": 5, "depth": 2, "layer_rank": 2},
    "training": {"epochs": 30, "batch": 16, "lr": 0.003},
    "data": {"n_samples": 96, "n_test": 16},
    "samples": {"count": 3},
    "eig": {"n_out": 40, "n_in": 300, "design": [0, 4]},
    "seed": 33,
    "threads": 2
  })";
  RunConfig cfg = parse_run_config(config, {"output_dir=\"" + dir.file("out") + "\""});

  run_subcommand("sample-prior", cfg);
  const nlohmann::json sp_manifest = read_json(dir.file("out") + "/manifest.json");
  CHECK(sp_manifest["command"] == "sample-prior");

  run_subcommand("gen-data", cfg);
  const Dataset data = Dataset::load(dir.file("out") + "/dataset");
  CHECK(data.size() == 96);
  CHECK(data.test_idx.size() == 16);
  const nlohmann::json gd_manifest = read_json(dir.file("out") + "/manifest.json");
  CHECK(gd_manifest["pde_solves"]["forward"] == 96);

  run_subcommand("build-bases", cfg);
  run_subcommand("train", cfg);
  const ProjectedResNet net = ProjectedResNet::load(dir.file("out") + "/net");
  CHECK(net.input_dim() == 100);
  CHECK(net.output_dim() == 9);
  CHECK(net.breadth() == 5);

  // Surrogate EIG estimation reports zero PDE solves.
  RunConfig surrogate_cfg = cfg;
  surrogate_cfg.eig.evaluator = "surrogate";
  run_subcommand("estimate-eig", surrogate_cfg);
  const nlohmann::json manifest = read_json(dir.file("out") + "/manifest.json");
  CHECK(manifest["pde_solves"]["forward"] == 0);
  CHECK(manifest["pde_solves"]["adjoint"] == 0);
}

TEST_CASE("reruns produce byte-identical artifacts at 1 and 4 threads") {
  test::TempDir dir("cli_det");
  auto run_with = [&](const std::string& out, int threads) {
    RunConfig cfg = parse_run_config(
        kDiagConfig, {"output_dir=\"" + dir.file(out) + "\"",
                      "threads=" + std::to_string(threads), "eig.design=[0,2]"});
    run_subcommand("estimate-eig", cfg);
    return read_bytes(dir.file(out) + "/eig.json") +
           read_bytes(dir.file(out) + "/eig_terms.csv") +
           read_bytes(dir.file(out) + "/manifest.json");
  };
  const std::string a = run_with("a", 1);
  const std::string b = run_with("b", 4);
  CHECK(a == b);
}

TEST_CASE("unknown subcommand is rejected") {
  RunConfig cfg = parse_run_config(kDiagConfig);
  CHECK_THROWS_AS(run_subcommand("no-such-command", cfg), ConfigError);
}
