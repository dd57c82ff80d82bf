#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "oedkit/errors.hpp"
#include "oedkit/prior.hpp"
#include "test_support.hpp"

using namespace oedkit;

namespace {

// Independent covariance oracle: dense eigendecomposition of A, then
// Gamma = A^-1 M A^-1 assembled explicitly.
Eigen::MatrixXd dense_covariance_oracle(const GaussianFieldPrior& prior) {
  const Eigen::MatrixXd a = Eigen::MatrixXd(prior.precision_op().matrix);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::MatrixXd a_inv = es.eigenvectors() *
                                es.eigenvalues().cwiseInverse().asDiagonal() *
                                es.eigenvectors().transpose();
  return a_inv * prior.mass_diag().asDiagonal() * a_inv;
}

}  // namespace

TEST_CASE("precision operator is symmetric and annihilates constants") {
  // Unit spacing and a dyadic gamma keep every stencil weight exactly
  // representable, so the constant-annihilation check is exact, not
  // approximate.
  const Grid grid(9, 7, 8.0, 6.0);
  const GaussianFieldPrior prior(grid, 0.75, 3.0, Eigen::VectorXd::Zero(grid.n()));
  const Eigen::MatrixXd a = Eigen::MatrixXd(prior.precision_op().matrix);

  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(grid.n());
  CHECK((a * ones - 3.0 * ones).cwiseAbs().maxCoeff() == 0.0);

  // Symmetry also holds exactly for non-representable weights.
  const Grid grid2(9, 7, 1.0, 2.0);
  const GaussianFieldPrior prior2(grid2, 0.7, 3.0, Eigen::VectorXd::Zero(grid2.n()));
  const Eigen::MatrixXd a2 = Eigen::MatrixXd(prior2.precision_op().matrix);
  CHECK((a2 - a2.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a2 * Eigen::VectorXd::Ones(grid2.n()) -
         Eigen::VectorXd::Constant(grid2.n(), 3.0))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("gamma=0 delta=2 on a 2x2 unit grid gives covariance I/4") {
  const Grid grid(2, 2, 1.0, 1.0);
  const GaussianFieldPrior prior(grid, 0.0, 2.0, Eigen::VectorXd::Zero(4));
  const Eigen::MatrixXd cov = prior.dense_covariance();
  CHECK((cov - 0.25 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("adr-style configuration assembles A = I - 0.1 lap") {
  const Grid grid(6, 6, 1.0, 1.0);
  const GaussianFieldPrior prior(grid, 0.1, 1.0, Eigen::VectorXd::Zero(grid.n()));
  const Eigen::MatrixXd a = Eigen::MatrixXd(prior.precision_op().matrix);

  // Interior row: diagonal 1 + 0.1 * (2/hx^2 + 2/hy^2), neighbors -0.1/h^2.
  const double h2 = grid.hx() * grid.hx();
  const int mid = grid.node(2, 3);
  CHECK(a(mid, mid) == doctest::Approx(1.0 + 0.1 * 4.0 / h2).epsilon(1e-14));
  CHECK(a(mid, grid.node(3, 3)) == doctest::Approx(-0.1 / h2).epsilon(1e-14));
  CHECK(a(mid, grid.node(2, 2)) == doctest::Approx(-0.1 / h2).epsilon(1e-14));
}

TEST_CASE("covariance factor matches the dense inverse oracle") {
  const Grid grid(8, 8, 1.0, 1.0);
  const GaussianFieldPrior prior(grid, 1.0, 5.0, Eigen::VectorXd::Zero(grid.n()));

  const Eigen::MatrixXd factor = prior.dense_cov_factor();
  const Eigen::MatrixXd cov = factor * factor.transpose();
  const Eigen::MatrixXd oracle = dense_covariance_oracle(prior);

  CHECK((cov - oracle).norm() / oracle.norm() < 1e-10);
}

TEST_CASE("sampling is deterministic for a fixed stream") {
  const Grid grid(5, 5, 1.0, 1.0);
  const GaussianFieldPrior prior(grid, 0.3, 1.5, Eigen::VectorXd::Zero(grid.n()));
  RngStream a(42, streams::kPriorSample, 7);
  RngStream b(42, streams::kPriorSample, 7);
  CHECK(prior.sample(a) == prior.sample(b));
}

TEST_CASE("errors: non-positive delta and mean length mismatch") {
  const Grid grid(4, 4, 1.0, 1.0);
  CHECK_THROWS_AS(GaussianFieldPrior(grid, 0.1, 0.0, Eigen::VectorXd::Zero(16)),
                  ConfigError);
  CHECK_THROWS_AS(GaussianFieldPrior(grid, 0.1, -1.0, Eigen::VectorXd::Zero(16)),
                  ConfigError);
  CHECK_THROWS_AS(GaussianFieldPrior(grid, 0.1, 1.0, Eigen::VectorXd::Zero(15)),
                  ConfigError);
}

TEST_CASE("identity-covariance sampling statistics") {
  // gamma=0, delta=1 on a unit-spacing grid makes M = I and A = I, so samples
  // are standard normal. 1e5 samples, covariance within 5% of I in max-abs.
  const Grid grid(2, 2, 1.0, 1.0);
  const double c = 1.7;
  const GaussianFieldPrior prior(grid, 0.0, 1.0, Eigen::VectorXd::Constant(4, c));

  const int n_samples = 100000;
  Eigen::MatrixXd samples(4, n_samples);
  RngStream rng(123, streams::kPriorSample);
  prior.sample_block(rng, samples);

  const Eigen::VectorXd mean = samples.rowwise().mean();
  Eigen::MatrixXd centered = samples.colwise() - mean;
  const Eigen::MatrixXd cov = centered * centered.transpose() / (n_samples - 1);
  CHECK((cov - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 0.05);

  // Componentwise sample mean within 3 standard errors of the constant mean.
  const double std_err = 1.0 / std::sqrt(static_cast<double>(n_samples));
  CHECK((mean.array() - c).abs().maxCoeff() < 3.0 * std_err);
}

TEST_CASE("whitened samples have identity covariance on an 8x8 grid") {
  const Grid grid(8, 8, 1.0, 1.0);
  const GaussianFieldPrior prior(grid, 0.5, 2.0, Eigen::VectorXd::Zero(grid.n()));

  const int n_samples = 100000;
  const int n = grid.n();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  RngStream rng(99, streams::kPriorSample);
  Eigen::MatrixXd block(n, 1000);
  for (int b = 0; b < n_samples / 1000; ++b) {
    prior.sample_block(rng, block);
    for (int c = 0; c < 1000; ++c) {
      const Eigen::VectorXd w = prior.whiten(block.col(c));
      acc.noalias() += w * w.transpose();
    }
  }
  acc /= static_cast<double>(n_samples);
  CHECK((acc - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("whitening fixed points and diagonal arithmetic") {
  const Grid grid(2, 2, 1.0, 1.0);
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(4, 0.3);
  const GaussianFieldPrior prior(grid, 0.0, 2.0, mean);  // L = I/2

  CHECK(prior.whiten(mean).norm() == 0.0);

  Eigen::VectorXd shifted = mean;
  shifted[0] += 1.0;
  const Eigen::VectorXd w = prior.whiten(shifted);
  CHECK(w[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(w.tail(3).norm() == 0.0);
}

TEST_CASE("whiten/unwhiten round-trips on random vectors") {
  const Grid grid(7, 5, 1.3, 0.8);
  const GaussianFieldPrior prior(grid, 0.9, 1.1, Eigen::VectorXd::Zero(grid.n()));
  RngStream rng(7);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd v = test::random_vector(grid.n(), rng);
    const double fwd = (prior.whiten(prior.unwhiten(v)) - v).cwiseAbs().maxCoeff();
    const double bwd = (prior.unwhiten(prior.whiten(v)) - v).cwiseAbs().maxCoeff();
    worst = std::max({worst, fwd, bwd});
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("prior persistence round-trip") {
  test::TempDir dir("prior");
  const Grid grid(6, 4, 2.0, 1.0);
  Eigen::VectorXd mean(grid.n());
  RngStream rng(5);
  for (int i = 0; i < grid.n(); ++i) mean[i] = rng.normal();

  const GaussianFieldPrior prior(grid, 0.4, 1.7, mean);
  prior.save(dir.file("prior"));
  const GaussianFieldPrior loaded = GaussianFieldPrior::load(dir.file("prior"));

  CHECK(loaded.grid().nx == 6);
  CHECK(loaded.grid().ny == 4);
  CHECK(loaded.gamma() == 0.4);
  CHECK(loaded.delta() == 1.7);
  CHECK((loaded.mean() - mean).norm() == 0.0);

  RngStream a(11, streams::kPriorSample), b(11, streams::kPriorSample);
  CHECK(prior.sample(a) == loaded.sample(b));
}

TEST_CASE("dense gaussian sampler reproduces its covariance") {
  RngStream setup(3);
  const Eigen::MatrixXd cov = test::random_spd(3, setup);
  const Eigen::VectorXd mean = test::random_vector(3, setup);
  const DenseGaussian prior(mean, cov);

  const int n_samples = 200000;
  Eigen::MatrixXd samples(3, n_samples);
  RngStream rng(17, streams::kPriorSample);
  prior.sample_block(rng, samples);
  const Eigen::VectorXd sample_mean = samples.rowwise().mean();
  Eigen::MatrixXd centered = samples.colwise() - sample_mean;
  const Eigen::MatrixXd sample_cov = centered * centered.transpose() / (n_samples - 1);
  CHECK((sample_cov - cov).cwiseAbs().maxCoeff() < 0.05 * cov.cwiseAbs().maxCoeff());
}
