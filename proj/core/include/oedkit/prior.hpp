#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cstdint>
#include <memory>
#include <string>

#include "oedkit/grid.hpp"
#include "oedkit/rng.hpp"

namespace oedkit {

// Gaussian sampling interface shared by the grid-field prior and small dense
// test priors. Implementations are immutable after construction and safe for
// concurrent reads; callers own per-thread RngStreams.
class GaussianSampler {
 public:
  virtual ~GaussianSampler() = default;

  virtual int dim() const = 0;
  virtual const Eigen::VectorXd& mean() const = 0;

  // Draws one sample per column of out (out must be dim() x n_samples).
  virtual void sample_block(RngStream& rng, Eigen::Ref<Eigen::MatrixXd> out) const = 0;

  Eigen::VectorXd sample(RngStream& rng) const;

  // Dense factor L with covariance = L L^T. Used by the reduction module's
  // whitened eigensolve and by closed-form oracles; only valid at desk scale.
  virtual Eigen::MatrixXd dense_cov_factor() const = 0;
  virtual Eigen::MatrixXd dense_covariance() const;
};

// A = delta I - gamma Lap_h with homogeneous Neumann closure. Assembled as
// delta I + gamma L_graph where L_graph is the grid graph Laplacian scaled by
// the axis spacings, which keeps A exactly symmetric and A * 1 = delta * 1.
struct PrecisionOperator {
  double gamma = 0.0;
  double delta = 0.0;
  Eigen::SparseMatrix<double> matrix;
};

// Discretized Gaussian field measure N(mean, Gamma) with Gamma = A^-1 M A^-1,
// M the lumped mass matrix hx*hy*I. Sampling applies the covariance factor
// L = A^-1 M^(1/2) through a cached sparse Cholesky factorization of A.
class GaussianFieldPrior : public GaussianSampler {
 public:
  GaussianFieldPrior(const Grid& grid, double gamma, double delta, Eigen::VectorXd mean);

  int dim() const override { return grid_.n(); }
  const Eigen::VectorXd& mean() const override { return mean_; }
  const Grid& grid() const { return grid_; }
  double gamma() const { return gamma_; }
  double delta() const { return delta_; }
  const PrecisionOperator& precision_op() const { return op_; }
  const Eigen::VectorXd& mass_diag() const { return mass_diag_; }

  void sample_block(RngStream& rng, Eigen::Ref<Eigen::MatrixXd> out) const override;

  // whiten(m) = L^-1 (m - mean) = M^(-1/2) A (m - mean); unwhiten inverts it.
  Eigen::VectorXd whiten(const Eigen::VectorXd& m) const;
  Eigen::VectorXd unwhiten(const Eigen::VectorXd& w) const;

  // Applies L to a block of whitened vectors: mean-free unwhiten.
  Eigen::MatrixXd apply_cov_factor(const Eigen::MatrixXd& w) const;

  Eigen::MatrixXd dense_cov_factor() const override;

  void save(const std::string& base_path) const;
  static GaussianFieldPrior load(const std::string& base_path);

 private:
  Grid grid_;
  double gamma_ = 0.0;
  double delta_ = 0.0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd mass_diag_;
  double sqrt_mass_ = 1.0;
  PrecisionOperator op_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> chol_;
};

// Explicit mean/covariance Gaussian for small oracle instances.
class DenseGaussian : public GaussianSampler {
 public:
  DenseGaussian(Eigen::VectorXd mean, const Eigen::MatrixXd& covariance);

  int dim() const override { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const override { return mean_; }
  void sample_block(RngStream& rng, Eigen::Ref<Eigen::MatrixXd> out) const override;
  Eigen::MatrixXd dense_cov_factor() const override { return factor_; }
  Eigen::MatrixXd dense_covariance() const override { return cov_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd factor_;
};

}  // namespace oedkit
