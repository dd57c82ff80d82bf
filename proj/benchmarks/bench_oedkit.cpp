#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "oedkit/eig.hpp"
#include "oedkit/forward_models.hpp"
#include "oedkit/prior.hpp"
#include "oedkit/projected_resnet.hpp"

using namespace oedkit;

namespace {

GaussianFieldPrior make_prior(int n_side) {
  const Grid grid(n_side, n_side, 1.0, 1.0);
  return GaussianFieldPrior(grid, 2e-4, 2.5e-3, Eigen::VectorXd::Zero(grid.n()));
}

SensorLayout desk_sensors(const Grid& grid) {
  return SensorLayout::from_grid_spec(grid, 0.1, 0.1, 0.2, 0.2, 5, 5);
}

}  // namespace

static void BM_PriorSampleBlock(benchmark::State& state) {
  const int n_side = static_cast<int>(state.range(0));
  const GaussianFieldPrior prior(make_prior(n_side));
  RngStream rng(1, streams::kPriorSample);
  Eigen::MatrixXd block(prior.dim(), 256);
  for (auto _ : state) {
    prior.sample_block(rng, block);
    benchmark::DoNotOptimize(block.data());
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_PriorSampleBlock)->Arg(16)->Arg(32)->Arg(64);

static void BM_EllipticSolve(benchmark::State& state) {
  const int n_side = static_cast<int>(state.range(0));
  const Grid grid(n_side, n_side, 1.0, 1.0);
  const EllipticModel model(grid, desk_sensors(grid));
  const GaussianFieldPrior prior(make_prior(n_side));
  RngStream rng(2, streams::kPriorSample);
  const Eigen::VectorXd m = prior.sample(rng);
  Eigen::VectorXd out(model.output_dim());
  for (auto _ : state) {
    model.evaluate(m, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_EllipticSolve)->Arg(16)->Arg(32)->Arg(64);

static void BM_AdrSolve(benchmark::State& state) {
  const int n_side = static_cast<int>(state.range(0));
  const Grid grid(n_side, n_side, 1.0, 1.0);
  const AdrModel model(grid, desk_sensors(grid), 0.01, 1.0);
  const GaussianFieldPrior prior(make_prior(n_side));
  RngStream rng(3, streams::kPriorSample);
  const Eigen::VectorXd m = prior.sample(rng);
  Eigen::VectorXd out(model.output_dim());
  for (auto _ : state) {
    model.evaluate(m, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_AdrSolve)->Arg(16)->Arg(32);

static void BM_AdrJacobian(benchmark::State& state) {
  const int n_side = static_cast<int>(state.range(0));
  const Grid grid(n_side, n_side, 1.0, 1.0);
  const AdrModel model(grid, desk_sensors(grid), 0.01, 1.0);
  const GaussianFieldPrior prior(make_prior(n_side));
  RngStream rng(4, streams::kPriorSample);
  const Eigen::VectorXd m = prior.sample(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.jacobian(m));
  }
}
BENCHMARK(BM_AdrJacobian)->Arg(16)->Arg(32);

static void BM_SurrogateForwardBlock(benchmark::State& state) {
  RngStream rng(5);
  const int n = 256, d = 25, r = 15;
  Eigen::MatrixXd v(n, r), phi(d, r);
  for (int c = 0; c < r; ++c)
    for (int i = 0; i < n; ++i) v(i, c) = rng.normal();
  for (int c = 0; c < r; ++c)
    for (int i = 0; i < d; ++i) phi(i, c) = rng.normal();
  ResNetConfig cfg;
  cfg.breadth = r;
  cfg.depth = 8;
  cfg.layer_rank = 5;
  ProjectedResNet net(cfg, v, phi, 5);

  Eigen::MatrixXd inputs(n, 1024);
  for (int c = 0; c < 1024; ++c)
    for (int i = 0; i < n; ++i) inputs(i, c) = rng.normal();
  Eigen::MatrixXd out;
  for (auto _ : state) {
    net.forward_block(inputs, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_SurrogateForwardBlock);

static void BM_LogNormalization(benchmark::State& state) {
  RngStream rng(6);
  Eigen::VectorXd pots(state.range(0));
  for (int i = 0; i < pots.size(); ++i) pots[i] = 1e4 * std::abs(rng.normal());
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_normalization(pots));
  }
}
BENCHMARK(BM_LogNormalization)->Arg(1024)->Arg(65536);

static void BM_DlmcLinearInstance(benchmark::State& state) {
  RngStream rng(7);
  Eigen::MatrixXd g(3, 3);
  for (int i = 0; i < 9; ++i) g(i / 3, i % 3) = rng.normal();
  const LinearMap map(g);
  const MapEvaluator eval(map);
  const DenseGaussian prior(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
  const NoiseModel noise = NoiseModel::uniform(1.0, 3);
  const Design design(3, {0, 2});
  DlmcOptions opt;
  opt.n_out = 50;
  opt.n_in = 2000;
  opt.seed = 7;
  opt.n_threads = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eig_dlmc(eval, design, prior, noise, opt).value);
  }
  state.SetItemsProcessed(state.iterations() * opt.n_out * opt.n_in);
}
BENCHMARK(BM_DlmcLinearInstance);

BENCHMARK_MAIN();
