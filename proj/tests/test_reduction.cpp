#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "oedkit/errors.hpp"
#include "oedkit/forward_models.hpp"
#include "oedkit/reduction.hpp"
#include "test_support.hpp"

using namespace oedkit;

namespace {

SensorLayout corner_sensors(const Grid& grid) {
  return SensorLayout::from_grid_spec(grid, 0.25, 0.25, 0.5, 0.5, 2, 2);
}

}  // namespace

TEST_CASE("as operator is exact for a linear map") {
  RngStream rng(1);
  const Eigen::MatrixXd g = test::random_matrix(4, 6, rng);
  const LinearMap map(g);
  const DenseGaussian prior(Eigen::VectorXd::Zero(6), Eigen::MatrixXd::Identity(6, 6));

  const Eigen::MatrixXd h1 = estimate_as_operator(map, prior, 1, 7);
  const Eigen::MatrixXd h9 = estimate_as_operator(map, prior, 9, 7);
  const Eigen::MatrixXd exact = g.transpose() * g;
  CHECK((h1 - exact).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((h9 - exact).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("as operator of the zero map is zero") {
  const LinearMap map(Eigen::MatrixXd::Zero(3, 5));
  const DenseGaussian prior(Eigen::VectorXd::Zero(5), Eigen::MatrixXd::Identity(5, 5));
  CHECK(estimate_as_operator(map, prior, 4, 0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("as eigenvalues are stable under sample doubling for the elliptic model") {
  const Grid grid(12, 12, 1.0, 1.0);
  const GaussianFieldPrior prior(grid, 0.1, 1.0, Eigen::VectorXd::Zero(grid.n()));
  const EllipticModel model(grid, corner_sensors(grid));

  const Eigen::MatrixXd h64 = estimate_as_operator(model, prior, 64, 5, 2);
  const Eigen::MatrixXd h128 = estimate_as_operator(model, prior, 128, 5, 2);
  const auto [v64, lam64] = as_basis(h64, prior, 5);
  const auto [v128, lam128] = as_basis(h128, prior, 5);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(lam64[i] - lam128[i]) / lam128[i] < 0.2);
  }
}

TEST_CASE("as basis diagonal case") {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 3);
  g.diagonal() << 3.0, 2.0, 1.0;
  const DenseGaussian prior(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
  const Eigen::MatrixXd h = g.transpose() * g;

  const auto [v, lambda] = as_basis(h, prior, 3);
  CHECK(lambda[0] == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(lambda[1] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(lambda[2] == doctest::Approx(1.0).epsilon(1e-12));
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
    e[k] = 1.0;
    CHECK(v.col(k).cwiseAbs().maxCoeff() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(std::abs(v.col(k).dot(e)) - 1.0) < 1e-10);
  }
}

TEST_CASE("as basis isotropic case keeps precision orthonormality") {
  const int n = 4;
  const DenseGaussian prior(Eigen::VectorXd::Zero(n),
                            4.0 * Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  const auto [v, lambda] = as_basis(h, prior, n);
  for (int k = 0; k < n; ++k) CHECK(lambda[k] == doctest::Approx(4.0).epsilon(1e-12));

  const Eigen::MatrixXd precision = 0.25 * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd gram = v.transpose() * precision * v;
  CHECK((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("as basis matches a dense generalized eigenproblem oracle") {
  RngStream rng(12);
  const int n = 8;
  const Eigen::MatrixXd cov = test::random_spd(n, rng);
  const Eigen::MatrixXd h = test::random_spd(n, rng, 0.0);
  const DenseGaussian prior(Eigen::VectorXd::Zero(n), cov);

  const auto [v, lambda] = as_basis(h, prior, n);

  // Oracle: H v = lambda Gamma^-1 v solved directly as a generalized
  // symmetric-definite problem.
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(h, cov.inverse());
  Eigen::VectorXd oracle = ges.eigenvalues().reverse();
  for (int k = 0; k < n; ++k) {
    CHECK(std::abs(lambda[k] - oracle[k]) <=
          1e-10 * std::max(1.0, std::abs(oracle[k])));
  }

  const Eigen::MatrixXd gram = v.transpose() * cov.inverse() * v;
  CHECK((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pod closed-form diagonal operator via monte carlo") {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 3);
  g.diagonal() << 3.0, 2.0, 1.0;
  const LinearMap map(g);
  const DenseGaussian prior(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));

  const auto [phi, lambda] = pod_basis(map, prior, 100000, 3, 42, 2);
  CHECK(std::abs(lambda[0] - 9.0) / 9.0 < 0.05);
  CHECK(std::abs(lambda[1] - 4.0) / 4.0 < 0.05);
  CHECK(std::abs(lambda[2] - 1.0) / 1.0 < 0.05);
  CHECK((phi.transpose() * phi - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <
        1e-10);
}

TEST_CASE("pod of a constant map is rank one") {
  Eigen::VectorXd c(3);
  c << 1.0, 2.0, -2.0;
  const LinearMap map(Eigen::MatrixXd::Zero(3, 4), c);
  const DenseGaussian prior(Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Identity(4, 4));

  const auto [phi, lambda] = pod_basis(map, prior, 50, 3, 3);
  CHECK(lambda[0] == doctest::Approx(c.squaredNorm()).epsilon(1e-10));
  CHECK(std::abs(lambda[1]) < 1e-10);
  CHECK(std::abs(lambda[2]) < 1e-10);
  CHECK(std::abs(std::abs(phi.col(0).dot(c / c.norm())) - 1.0) < 1e-10);
}

TEST_CASE("pod of the zero map is zero") {
  const LinearMap map(Eigen::MatrixXd::Zero(3, 4));
  const DenseGaussian prior(Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Identity(4, 4));
  const auto [phi, lambda] = pod_basis(map, prior, 20, 2, 5);
  CHECK(lambda.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("output projection error matches the spectral tail") {
  // For the diag(3,2,1) model the relative stacked projection error with
  // r_f = 2 is sqrt(lambda_3 / sum lambda) = sqrt(1/14).
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 3);
  g.diagonal() << 3.0, 2.0, 1.0;
  const LinearMap map(g);
  const DenseGaussian prior(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));

  const auto [phi, lambda] = pod_basis(map, prior, 50000, 2, 10, 2);

  RngStream rng(11, streams::kTestInputs);
  Eigen::MatrixXd inputs(3, 20000);
  prior.sample_block(rng, inputs);
  Eigen::MatrixXd outputs;
  map.evaluate_block(inputs, outputs);
  const Eigen::MatrixXd projected = phi * (phi.transpose() * outputs);
  const double rel_err = (outputs - projected).norm() / outputs.norm();
  const double expected = std::sqrt(1.0 / 14.0);
  CHECK(std::abs(rel_err - expected) / expected < 0.10);
}

TEST_CASE("sampled operators are deterministic and psd") {
  const Grid grid(10, 10, 1.0, 1.0);
  const GaussianFieldPrior prior(grid, 0.1, 1.0, Eigen::VectorXd::Zero(grid.n()));
  const EllipticModel model(grid, corner_sensors(grid));

  const Eigen::MatrixXd h_a = estimate_as_operator(model, prior, 16, 9, 1);
  const Eigen::MatrixXd h_b = estimate_as_operator(model, prior, 16, 9, 2);
  CHECK(h_a == h_b);  // bitwise, any thread count

  const auto [v, lambda] = as_basis(h_a, prior, grid.n());
  CHECK(lambda.minCoeff() >= -1e-12);

  const auto [phi, pod] = pod_basis(model, prior, 32, 4, 9, 2);
  CHECK(pod.minCoeff() >= -1e-12);
}

TEST_CASE("bases persistence keeps orthonormality invariants") {
  test::TempDir dir("bases");
  const Grid grid(8, 8, 1.0, 1.0);
  const GaussianFieldPrior prior(grid, 0.2, 1.0, Eigen::VectorXd::Zero(grid.n()));
  const EllipticModel model(grid, corner_sensors(grid));

  ReducedBases bases;
  const Eigen::MatrixXd h = estimate_as_operator(model, prior, 24, 13);
  auto [v, lam] = as_basis(h, prior, 4);
  auto [phi, pod] = pod_basis(model, prior, 24, 3, 13);
  bases.input_basis = v;
  bases.input_eigs = lam;
  bases.output_basis = phi;
  bases.output_eigs = pod;
  bases.n_samples_as = 24;
  bases.n_samples_pod = 24;
  bases.seed = 13;
  bases.save(dir.file("bases"));

  const ReducedBases loaded = ReducedBases::load(dir.file("bases"));
  CHECK(loaded.input_basis == bases.input_basis);
  CHECK(loaded.output_basis == bases.output_basis);
  CHECK(loaded.n_samples_as == 24);

  // Orthonormality re-checked after the round trip.
  const Eigen::MatrixXd precision = prior.dense_covariance().inverse();
  const Eigen::MatrixXd gram =
      loaded.input_basis.transpose() * precision * loaded.input_basis;
  CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
  const Eigen::MatrixXd pod_gram = loaded.output_basis.transpose() * loaded.output_basis;
  CHECK((pod_gram - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);

  // Spectra decrease.
  for (int i = 1; i < loaded.input_eigs.size(); ++i) {
    CHECK(loaded.input_eigs[i] <= loaded.input_eigs[i - 1] + 1e-15);
  }
}

TEST_CASE("energy rank rule") {
  Eigen::VectorXd eigs(4);
  eigs << 8.0, 1.0, 0.5, 0.5;
  CHECK(energy_rank(eigs, 0.80) == 1);
  CHECK(energy_rank(eigs, 0.90) == 2);
  CHECK(energy_rank(eigs, 1.00) == 4);
  CHECK_THROWS_AS(energy_rank(eigs, 0.0), ConfigError);
}

TEST_CASE("rank bounds are validated") {
  const DenseGaussian prior(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
  const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(as_basis(h, prior, 0), ConfigError);
  CHECK_THROWS_AS(as_basis(h, prior, 4), ConfigError);

  const LinearMap map(Eigen::MatrixXd::Identity(3, 3));
  CHECK_THROWS_AS(pod_basis(map, prior, 10, 4, 0), ConfigError);
  CHECK_THROWS_AS(pod_basis(map, prior, 2, 3, 0), ConfigError);
}
