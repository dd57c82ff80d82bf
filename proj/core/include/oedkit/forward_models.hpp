#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>

#include "oedkit/grid.hpp"
#include "oedkit/sensors.hpp"

namespace oedkit {

using SourceFn = std::function<double(double, double)>;

// Smoothed bump source used by both PDE models by default.
double bump_source(double x, double y);

// Parameter-to-observable map F_d over all d candidate sensors. Evaluation
// and Jacobian assembly are pure functions of (model config, m) and safe to
// call concurrently; any factorizations live in per-call state. The atomic
// counters keep the PDE-solve budget bookkeeping.
class ObservableMap {
 public:
  virtual ~ObservableMap() = default;

  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;

  virtual void evaluate(const Eigen::VectorXd& m, Eigen::VectorXd& out) const = 0;
  Eigen::VectorXd evaluate(const Eigen::VectorXd& m) const;

  // One sample per column; default falls back to per-column evaluate.
  virtual void evaluate_block(const Eigen::Ref<const Eigen::MatrixXd>& m_cols,
                              Eigen::MatrixXd& out) const;

  // Dense d x n Jacobian of evaluate at m, assembled row-wise via adjoints
  // for the PDE models.
  virtual Eigen::MatrixXd jacobian(const Eigen::VectorXd& m) const = 0;

  std::uint64_t forward_solve_count() const { return forward_solves_.load(); }
  std::uint64_t adjoint_solve_count() const { return adjoint_solves_.load(); }
  void reset_solve_counters() const {
    forward_solves_.store(0);
    adjoint_solves_.store(0);
  }

  ObservableMap() = default;
  ObservableMap(const ObservableMap&) = delete;
  ObservableMap& operator=(const ObservableMap&) = delete;

 protected:
  mutable std::atomic<std::uint64_t> forward_solves_{0};
  mutable std::atomic<std::uint64_t> adjoint_solves_{0};
};

// F(m) = G m + offset. The oracle model with constant Jacobian G.
class LinearMap : public ObservableMap {
 public:
  using ObservableMap::evaluate;
  LinearMap(Eigen::MatrixXd g, Eigen::VectorXd offset);
  explicit LinearMap(Eigen::MatrixXd g);

  int input_dim() const override { return static_cast<int>(g_.cols()); }
  int output_dim() const override { return static_cast<int>(g_.rows()); }
  void evaluate(const Eigen::VectorXd& m, Eigen::VectorXd& out) const override;
  void evaluate_block(const Eigen::Ref<const Eigen::MatrixXd>& m_cols,
                      Eigen::MatrixXd& out) const override;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd&) const override { return g_; }
  const Eigen::MatrixXd& g() const { return g_; }
  const Eigen::VectorXd& offset() const { return offset_; }

 private:
  Eigen::MatrixXd g_;
  Eigen::VectorXd offset_;
};

// -div(exp(m) grad u) = f on the grid interior, u = 0 on the boundary.
// Observations are u at the sensor nodes. Fluxes use arithmetic face
// averages of exp(m), which keeps the discrete operator differentiable in m.
class EllipticModel : public ObservableMap {
 public:
  using ObservableMap::evaluate;
  EllipticModel(const Grid& grid, SensorLayout layout, SourceFn source = bump_source);

  int input_dim() const override { return grid_.n(); }
  int output_dim() const override { return layout_.count(); }
  void evaluate(const Eigen::VectorXd& m, Eigen::VectorXd& out) const override;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& m) const override;

  const Grid& grid() const { return grid_; }
  const SensorLayout& layout() const { return layout_; }

  // Full solution field (boundary zeros included); used by tests.
  Eigen::VectorXd solve_field(const Eigen::VectorXd& m) const;

 private:
  struct SolveState;
  void solve_internal(const Eigen::VectorXd& m, SolveState& state) const;

  Grid grid_;
  SensorLayout layout_;
  Eigen::VectorXd rhs_;  // source at interior nodes
  std::vector<int> interior_of_node_;  // node -> interior index or -1
  std::vector<int> node_of_interior_;
};

// -div(k grad u) + v . grad u + exp(m) u^3 = f, u = 0 on the boundary.
// The divergence-free velocity comes from the stream function
// psi = v0 sin(pi x / lx) sin(pi y / ly). Solved by damped Newton.
class AdrModel : public ObservableMap {
 public:
  using ObservableMap::evaluate;
  AdrModel(const Grid& grid, SensorLayout layout, double k = 0.01, double v0 = 30.0,
           SourceFn source = bump_source);

  int input_dim() const override { return grid_.n(); }
  int output_dim() const override { return layout_.count(); }
  void evaluate(const Eigen::VectorXd& m, Eigen::VectorXd& out) const override;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& m) const override;

  const Grid& grid() const { return grid_; }
  const SensorLayout& layout() const { return layout_; }
  double diffusion() const { return k_; }

  Eigen::VectorXd solve_field(const Eigen::VectorXd& m) const;

 private:
  struct SolveState;
  void solve_internal(const Eigen::VectorXd& m, SolveState& state) const;

  Grid grid_;
  SensorLayout layout_;
  double k_ = 0.01;
  double v0_ = 30.0;
  Eigen::VectorXd rhs_;
  Eigen::SparseMatrix<double> linear_op_;  // diffusion + upwind advection, m-independent
  std::vector<int> interior_of_node_;
  std::vector<int> node_of_interior_;
};

}  // namespace oedkit
