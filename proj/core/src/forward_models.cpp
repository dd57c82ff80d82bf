#include "oedkit/forward_models.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "oedkit/errors.hpp"

namespace oedkit {

double bump_source(double x, double y) {
  const double g = std::exp(-25.0 * (x - 0.7) * (x - 0.7) - 25.0 * (y - 0.7) * (y - 0.7));
  return std::max(0.5, g);
}

Eigen::VectorXd ObservableMap::evaluate(const Eigen::VectorXd& m) const {
  Eigen::VectorXd out(output_dim());
  evaluate(m, out);
  return out;
}

void ObservableMap::evaluate_block(const Eigen::Ref<const Eigen::MatrixXd>& m_cols,
                                   Eigen::MatrixXd& out) const {
  out.resize(output_dim(), m_cols.cols());
  Eigen::VectorXd tmp(output_dim());
  for (Eigen::Index c = 0; c < m_cols.cols(); ++c) {
    evaluate(m_cols.col(c), tmp);
    out.col(c) = tmp;
  }
}

LinearMap::LinearMap(Eigen::MatrixXd g, Eigen::VectorXd offset)
    : g_(std::move(g)), offset_(std::move(offset)) {
  if (offset_.size() != g_.rows()) throw ConfigError("linear map offset length mismatch");
}

LinearMap::LinearMap(Eigen::MatrixXd g)
    : LinearMap(std::move(g), Eigen::VectorXd::Zero(g.rows())) {}

void LinearMap::evaluate(const Eigen::VectorXd& m, Eigen::VectorXd& out) const {
  if (m.size() != g_.cols()) throw ConfigError("linear map input length mismatch");
  out = g_ * m + offset_;
}

void LinearMap::evaluate_block(const Eigen::Ref<const Eigen::MatrixXd>& m_cols,
                               Eigen::MatrixXd& out) const {
  if (m_cols.rows() != g_.cols()) throw ConfigError("linear map input length mismatch");
  out = g_ * m_cols;
  out.colwise() += offset_;
}

namespace {

// Interior (Dirichlet) index maps shared by the PDE models.
void build_interior_maps(const Grid& g, std::vector<int>& interior_of_node,
                         std::vector<int>& node_of_interior) {
  interior_of_node.assign(g.n(), -1);
  node_of_interior.clear();
  for (int j = 1; j < g.ny - 1; ++j) {
    for (int i = 1; i < g.nx - 1; ++i) {
      interior_of_node[g.node(i, j)] = static_cast<int>(node_of_interior.size());
      node_of_interior.push_back(g.node(i, j));
    }
  }
  if (node_of_interior.empty())
    throw ConfigError("grid has no interior nodes; need nx, ny >= 3 for PDE models");
}

Eigen::VectorXd interior_source(const Grid& g, const SourceFn& f,
                                const std::vector<int>& node_of_interior) {
  Eigen::VectorXd rhs(node_of_interior.size());
  for (std::size_t r = 0; r < node_of_interior.size(); ++r) {
    const int node = node_of_interior[r];
    rhs[static_cast<Eigen::Index>(r)] = f(g.x(g.node_i(node)), g.y(g.node_j(node)));
  }
  return rhs;
}

}  // namespace

// ---------------------------------------------------------------------------
// EllipticModel

struct EllipticModel::SolveState {
  Eigen::VectorXd kappa;   // exp(m), all nodes
  Eigen::VectorXd u_full;  // solution with boundary zeros
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> chol;
};

EllipticModel::EllipticModel(const Grid& grid, SensorLayout layout, SourceFn source)
    : grid_(grid), layout_(std::move(layout)) {
  build_interior_maps(grid_, interior_of_node_, node_of_interior_);
  rhs_ = interior_source(grid_, source, node_of_interior_);
}

void EllipticModel::solve_internal(const Eigen::VectorXd& m, SolveState& s) const {
  if (m.size() != grid_.n()) throw ConfigError("elliptic parameter length mismatch");
  if (!m.allFinite()) throw NumericalError("elliptic parameter contains non-finite values");

  s.kappa = m.array().exp();
  const int n_int = static_cast<int>(node_of_interior_.size());
  const double ax = 1.0 / (grid_.hx() * grid_.hx());
  const double ay = 1.0 / (grid_.hy() * grid_.hy());

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n_int) * 5);
  for (int row = 0; row < n_int; ++row) {
    const int node = node_of_interior_[row];
    const int i = grid_.node_i(node), j = grid_.node_j(node);
    const double kc = s.kappa[node];
    const double ke = 0.5 * (kc + s.kappa[grid_.node(i + 1, j)]);
    const double kw = 0.5 * (kc + s.kappa[grid_.node(i - 1, j)]);
    const double kn = 0.5 * (kc + s.kappa[grid_.node(i, j + 1)]);
    const double ks = 0.5 * (kc + s.kappa[grid_.node(i, j - 1)]);
    trip.emplace_back(row, row, ax * (ke + kw) + ay * (kn + ks));
    const int east = interior_of_node_[grid_.node(i + 1, j)];
    const int west = interior_of_node_[grid_.node(i - 1, j)];
    const int north = interior_of_node_[grid_.node(i, j + 1)];
    const int south = interior_of_node_[grid_.node(i, j - 1)];
    if (east >= 0) trip.emplace_back(row, east, -ax * ke);
    if (west >= 0) trip.emplace_back(row, west, -ax * kw);
    if (north >= 0) trip.emplace_back(row, north, -ay * kn);
    if (south >= 0) trip.emplace_back(row, south, -ay * ks);
  }
  Eigen::SparseMatrix<double> K(n_int, n_int);
  K.setFromTriplets(trip.begin(), trip.end());
  K.makeCompressed();

  s.chol.compute(K);
  if (s.chol.info() != Eigen::Success) {
    throw NumericalError("elliptic stiffness factorization failed");
  }
  const Eigen::VectorXd u_int = s.chol.solve(rhs_);
  const double residual = (K * u_int - rhs_).norm();
  if (!u_int.allFinite() || residual > 1e-8 * std::max(1.0, rhs_.norm())) {
    throw NumericalError("elliptic solve breakdown; residual norm = " +
                         std::to_string(residual));
  }
  forward_solves_.fetch_add(1, std::memory_order_relaxed);

  s.u_full = Eigen::VectorXd::Zero(grid_.n());
  for (int r = 0; r < n_int; ++r) s.u_full[node_of_interior_[r]] = u_int[r];
}

void EllipticModel::evaluate(const Eigen::VectorXd& m, Eigen::VectorXd& out) const {
  SolveState s;
  solve_internal(m, s);
  out.resize(layout_.count());
  for (int k = 0; k < layout_.count(); ++k) out[k] = s.u_full[layout_.node_index[k]];
}

Eigen::VectorXd EllipticModel::solve_field(const Eigen::VectorXd& m) const {
  SolveState s;
  solve_internal(m, s);
  return s.u_full;
}

Eigen::MatrixXd EllipticModel::jacobian(const Eigen::VectorXd& m) const {
  SolveState s;
  solve_internal(m, s);
  const int n_int = static_cast<int>(node_of_interior_.size());
  const double ax2 = 0.5 / (grid_.hx() * grid_.hx());
  const double ay2 = 0.5 / (grid_.hy() * grid_.hy());

  // T = d(K(m) u)/dm, sparse n_int x n; entries use u with boundary zeros.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n_int) * 5);
  for (int row = 0; row < n_int; ++row) {
    const int node = node_of_interior_[row];
    const int i = grid_.node_i(node), j = grid_.node_j(node);
    const double uc = s.u_full[node];
    const double de = ax2 * (uc - s.u_full[grid_.node(i + 1, j)]);
    const double dw = ax2 * (uc - s.u_full[grid_.node(i - 1, j)]);
    const double dn = ay2 * (uc - s.u_full[grid_.node(i, j + 1)]);
    const double ds = ay2 * (uc - s.u_full[grid_.node(i, j - 1)]);
    trip.emplace_back(row, node, (de + dw + dn + ds) * s.kappa[node]);
    const int en = grid_.node(i + 1, j);
    const int wn = grid_.node(i - 1, j);
    const int nn = grid_.node(i, j + 1);
    const int sn = grid_.node(i, j - 1);
    trip.emplace_back(row, en, de * s.kappa[en]);
    trip.emplace_back(row, wn, dw * s.kappa[wn]);
    trip.emplace_back(row, nn, dn * s.kappa[nn]);
    trip.emplace_back(row, sn, ds * s.kappa[sn]);
  }
  Eigen::SparseMatrix<double> T(n_int, grid_.n());
  T.setFromTriplets(trip.begin(), trip.end());

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(layout_.count(), grid_.n());
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n_int);
  for (int k = 0; k < layout_.count(); ++k) {
    const int ii = interior_of_node_[layout_.node_index[k]];
    if (ii < 0) continue;  // boundary sensor reads the fixed value, zero row
    e[ii] = 1.0;
    const Eigen::VectorXd lambda = s.chol.solve(e);  // K is symmetric
    if (s.chol.info() != Eigen::Success) {
      throw NumericalError("elliptic adjoint solve failed for sensor " + std::to_string(k));
    }
    adjoint_solves_.fetch_add(1, std::memory_order_relaxed);
    J.row(k) = -(T.transpose() * lambda).transpose();
    e[ii] = 0.0;
  }
  return J;
}

// ---------------------------------------------------------------------------
// AdrModel

struct AdrModel::SolveState {
  Eigen::VectorXd kappa_int;  // exp(m) at interior nodes
  Eigen::VectorXd u_int;
  Eigen::VectorXd u_full;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;  // final Newton linearization
};

AdrModel::AdrModel(const Grid& grid, SensorLayout layout, double k, double v0,
                   SourceFn source)
    : grid_(grid), layout_(std::move(layout)), k_(k), v0_(v0) {
  if (!(k_ > 0.0)) throw ConfigError("adr diffusion coefficient must be positive");
  build_interior_maps(grid_, interior_of_node_, node_of_interior_);
  rhs_ = interior_source(grid_, source, node_of_interior_);

  const int n_int = static_cast<int>(node_of_interior_.size());
  const double ax = k_ / (grid_.hx() * grid_.hx());
  const double ay = k_ / (grid_.hy() * grid_.hy());
  const double pi = 3.14159265358979323846;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n_int) * 5);
  for (int row = 0; row < n_int; ++row) {
    const int node = node_of_interior_[row];
    const int i = grid_.node_i(node), j = grid_.node_j(node);
    const double x = grid_.x(i), y = grid_.y(j);
    // v = (d psi / dy, -d psi / dx), psi = v0 sin(pi x / lx) sin(pi y / ly)
    const double vx = v0_ * (pi / grid_.ly) * std::sin(pi * x / grid_.lx) *
                      std::cos(pi * y / grid_.ly);
    const double vy = -v0_ * (pi / grid_.lx) * std::cos(pi * x / grid_.lx) *
                      std::sin(pi * y / grid_.ly);

    double diag = 2.0 * ax + 2.0 * ay;
    double east = -ax, west = -ax, north = -ay, south = -ay;
    // First-order upwinding for the advection term.
    if (vx >= 0.0) {
      diag += vx / grid_.hx();
      west -= vx / grid_.hx();
    } else {
      diag -= vx / grid_.hx();
      east += vx / grid_.hx();
    }
    if (vy >= 0.0) {
      diag += vy / grid_.hy();
      south -= vy / grid_.hy();
    } else {
      diag -= vy / grid_.hy();
      north += vy / grid_.hy();
    }

    trip.emplace_back(row, row, diag);
    const int ie = interior_of_node_[grid_.node(i + 1, j)];
    const int iw = interior_of_node_[grid_.node(i - 1, j)];
    const int in = interior_of_node_[grid_.node(i, j + 1)];
    const int is = interior_of_node_[grid_.node(i, j - 1)];
    if (ie >= 0) trip.emplace_back(row, ie, east);
    if (iw >= 0) trip.emplace_back(row, iw, west);
    if (in >= 0) trip.emplace_back(row, in, north);
    if (is >= 0) trip.emplace_back(row, is, south);
  }
  linear_op_.resize(n_int, n_int);
  linear_op_.setFromTriplets(trip.begin(), trip.end());
  linear_op_.makeCompressed();
}

void AdrModel::solve_internal(const Eigen::VectorXd& m, SolveState& s) const {
  if (m.size() != grid_.n()) throw ConfigError("adr parameter length mismatch");
  if (!m.allFinite()) throw NumericalError("adr parameter contains non-finite values");

  const int n_int = static_cast<int>(node_of_interior_.size());
  s.kappa_int.resize(n_int);
  for (int r = 0; r < n_int; ++r) s.kappa_int[r] = std::exp(m[node_of_interior_[r]]);

  constexpr double kTol = 1e-10;
  constexpr int kMaxIter = 50;
  constexpr int kMaxHalvings = 10;

  Eigen::VectorXd u = Eigen::VectorXd::Zero(n_int);
  auto residual = [&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
    return linear_op_ * w + s.kappa_int.cwiseProduct(w.array().cube().matrix()) - rhs_;
  };

  Eigen::VectorXd res = residual(u);
  double res_norm = res.norm();
  bool factored = false;
  int iter = 0;
  while (res_norm > kTol) {
    if (iter++ >= kMaxIter) {
      throw NumericalError("adr newton did not converge after " +
                           std::to_string(kMaxIter) +
                           " iterations; residual norm = " + std::to_string(res_norm));
    }
    Eigen::SparseMatrix<double> Ju = linear_op_;
    Eigen::VectorXd reaction = 3.0 * s.kappa_int.array() * u.array().square();
    for (int r = 0; r < n_int; ++r) Ju.coeffRef(r, r) += reaction[r];
    s.lu.compute(Ju);
    if (s.lu.info() != Eigen::Success) {
      throw NumericalError("adr newton linearization factorization failed");
    }
    factored = true;
    const Eigen::VectorXd du = s.lu.solve(-res);

    double step = 1.0;
    Eigen::VectorXd u_try, res_try;
    double norm_try = 0.0;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      u_try = u + step * du;
      res_try = residual(u_try);
      norm_try = res_try.norm();
      if (norm_try < res_norm) break;
      step *= 0.5;
    }
    u = u_try;
    res = res_try;
    res_norm = norm_try;
  }
  if (!factored) {
    // Zero-source case converges before the first linearization; the Jacobian
    // path still needs a factorization of J_u at the solution.
    Eigen::SparseMatrix<double> Ju = linear_op_;
    Eigen::VectorXd reaction = 3.0 * s.kappa_int.array() * u.array().square();
    for (int r = 0; r < n_int; ++r) Ju.coeffRef(r, r) += reaction[r];
    s.lu.compute(Ju);
    if (s.lu.info() != Eigen::Success) {
      throw NumericalError("adr linearization factorization failed");
    }
  }
  forward_solves_.fetch_add(1, std::memory_order_relaxed);

  s.u_int = u;
  s.u_full = Eigen::VectorXd::Zero(grid_.n());
  for (int r = 0; r < n_int; ++r) s.u_full[node_of_interior_[r]] = u[r];
}

void AdrModel::evaluate(const Eigen::VectorXd& m, Eigen::VectorXd& out) const {
  SolveState s;
  solve_internal(m, s);
  out.resize(layout_.count());
  for (int k = 0; k < layout_.count(); ++k) out[k] = s.u_full[layout_.node_index[k]];
}

Eigen::VectorXd AdrModel::solve_field(const Eigen::VectorXd& m) const {
  SolveState s;
  solve_internal(m, s);
  return s.u_full;
}

Eigen::MatrixXd AdrModel::jacobian(const Eigen::VectorXd& m) const {
  SolveState s;
  solve_internal(m, s);
  const int n_int = static_cast<int>(node_of_interior_.size());

  // dR/dm is diagonal in the interior: exp(m) u^3 at each node.
  Eigen::VectorXd t = s.kappa_int.cwiseProduct(s.u_int.array().cube().matrix());

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(layout_.count(), grid_.n());
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n_int);
  for (int k = 0; k < layout_.count(); ++k) {
    const int ii = interior_of_node_[layout_.node_index[k]];
    if (ii < 0) continue;
    e[ii] = 1.0;
    const Eigen::VectorXd lambda = s.lu.transpose().solve(e);
    adjoint_solves_.fetch_add(1, std::memory_order_relaxed);
    if (!lambda.allFinite()) {
      throw NumericalError("adr adjoint solve failed for sensor " + std::to_string(k));
    }
    for (int r = 0; r < n_int; ++r) {
      J(k, node_of_interior_[r]) = -lambda[r] * t[r];
    }
    e[ii] = 0.0;
  }
  return J;
}

}  // namespace oedkit
