#include "oedkit/prior.hpp"

#include <cmath>
#include <vector>

#include "oedkit/container.hpp"
#include "oedkit/errors.hpp"

namespace oedkit {

Eigen::VectorXd GaussianSampler::sample(RngStream& rng) const {
  Eigen::MatrixXd block(dim(), 1);
  sample_block(rng, block);
  return block.col(0);
}

Eigen::MatrixXd GaussianSampler::dense_covariance() const {
  const Eigen::MatrixXd factor = dense_cov_factor();
  return factor * factor.transpose();
}

namespace {

Eigen::SparseMatrix<double> assemble_precision(const Grid& g, double gamma, double delta) {
  const double wx = gamma / (g.hx() * g.hx());
  const double wy = gamma / (g.hy() * g.hy());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(g.n()) * 5);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int row = g.node(i, j);
      double diag = delta;
      if (i > 0) {
        trip.emplace_back(row, g.node(i - 1, j), -wx);
        diag += wx;
      }
      if (i < g.nx - 1) {
        trip.emplace_back(row, g.node(i + 1, j), -wx);
        diag += wx;
      }
      if (j > 0) {
        trip.emplace_back(row, g.node(i, j - 1), -wy);
        diag += wy;
      }
      if (j < g.ny - 1) {
        trip.emplace_back(row, g.node(i, j + 1), -wy);
        diag += wy;
      }
      trip.emplace_back(row, row, diag);
    }
  }
  Eigen::SparseMatrix<double> A(g.n(), g.n());
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

}  // namespace

GaussianFieldPrior::GaussianFieldPrior(const Grid& grid, double gamma, double delta,
                                       Eigen::VectorXd mean)
    : grid_(grid), gamma_(gamma), delta_(delta), mean_(std::move(mean)) {
  if (!(delta_ > 0.0)) throw ConfigError("prior delta must be positive");
  if (gamma_ < 0.0) throw ConfigError("prior gamma must be nonnegative");
  if (mean_.size() != grid_.n()) {
    throw ConfigError("prior mean length " + std::to_string(mean_.size()) +
                      " does not match grid node count " + std::to_string(grid_.n()));
  }
  mass_diag_ = Eigen::VectorXd::Constant(grid_.n(), grid_.hx() * grid_.hy());
  sqrt_mass_ = std::sqrt(grid_.hx() * grid_.hy());
  op_.gamma = gamma_;
  op_.delta = delta_;
  op_.matrix = assemble_precision(grid_, gamma_, delta_);
  chol_.compute(op_.matrix);
  if (chol_.info() != Eigen::Success) {
    throw NumericalError("precision operator factorization failed");
  }
}

void GaussianFieldPrior::sample_block(RngStream& rng,
                                      Eigen::Ref<Eigen::MatrixXd> out) const {
  const int n = dim();
  if (out.rows() != n) throw ConfigError("sample block row count mismatch");
  for (Eigen::Index c = 0; c < out.cols(); ++c)
    for (int r = 0; r < n; ++r) out(r, c) = rng.normal();
  out = chol_.solve((sqrt_mass_ * out).eval());
  out.colwise() += mean_;
}

Eigen::VectorXd GaussianFieldPrior::whiten(const Eigen::VectorXd& m) const {
  if (m.size() != dim()) throw ConfigError("whiten input length mismatch");
  return (op_.matrix * (m - mean_)) / sqrt_mass_;
}

Eigen::VectorXd GaussianFieldPrior::unwhiten(const Eigen::VectorXd& w) const {
  if (w.size() != dim()) throw ConfigError("unwhiten input length mismatch");
  return mean_ + sqrt_mass_ * chol_.solve(w);
}

Eigen::MatrixXd GaussianFieldPrior::apply_cov_factor(const Eigen::MatrixXd& w) const {
  return sqrt_mass_ * chol_.solve(w);
}

Eigen::MatrixXd GaussianFieldPrior::dense_cov_factor() const {
  const int n = dim();
  if (n > 4096) {
    throw NumericalError("dense covariance factor requested for n > 4096");
  }
  return sqrt_mass_ * chol_.solve(Eigen::MatrixXd::Identity(n, n));
}

void GaussianFieldPrior::save(const std::string& base_path) const {
  Container c;
  c.add_meta("kind", std::string("gaussian_field_prior"));
  c.add_meta("nx", static_cast<std::int64_t>(grid_.nx));
  c.add_meta("ny", static_cast<std::int64_t>(grid_.ny));
  c.add_meta("lx", grid_.lx);
  c.add_meta("ly", grid_.ly);
  c.add_meta("gamma", gamma_);
  c.add_meta("delta", delta_);
  c.add_block("mean", mean_);
  save_container(base_path, c);
}

GaussianFieldPrior GaussianFieldPrior::load(const std::string& base_path) {
  const Container c = load_container(base_path);
  const Grid grid(static_cast<int>(c.meta_int("nx")), static_cast<int>(c.meta_int("ny")),
                  c.meta_double("lx"), c.meta_double("ly"));
  const Eigen::MatrixXd& mean = c.block("mean");
  if (mean.size() != grid.n()) {
    throw IoError("header/payload shape conflict: mean block size " +
                  std::to_string(mean.size()) + " vs grid node count " +
                  std::to_string(grid.n()));
  }
  Eigen::VectorXd mean_vec = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
  return GaussianFieldPrior(grid, c.meta_double("gamma"), c.meta_double("delta"),
                            std::move(mean_vec));
}

DenseGaussian::DenseGaussian(Eigen::VectorXd mean, const Eigen::MatrixXd& covariance)
    : mean_(std::move(mean)), cov_(covariance) {
  if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size()) {
    throw ConfigError("covariance shape does not match mean length");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("covariance is not positive definite");
  }
  factor_ = llt.matrixL();
}

void DenseGaussian::sample_block(RngStream& rng, Eigen::Ref<Eigen::MatrixXd> out) const {
  const int n = dim();
  if (out.rows() != n) throw ConfigError("sample block row count mismatch");
  for (Eigen::Index c = 0; c < out.cols(); ++c)
    for (int r = 0; r < n; ++r) out(r, c) = rng.normal();
  out = factor_ * out;
  out.colwise() += mean_;
}

}  // namespace oedkit
