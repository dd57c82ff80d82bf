#include "oedkit/reduction.hpp"

#include <string>

#include "oedkit/container.hpp"
#include "oedkit/errors.hpp"
#include "oedkit/parallel.hpp"

namespace oedkit {

Eigen::MatrixXd estimate_as_operator(const ObservableMap& map, const GaussianSampler& prior,
                                     int n_samples, std::uint64_t seed, int n_threads) {
  if (n_samples < 1) throw ConfigError("as operator needs n_samples >= 1");
  const int n = map.input_dim();
  const int d = map.output_dim();

  // Jacobians are computed in parallel but stacked by sample index, so the
  // Gram accumulation below is a fixed-order product for any thread count.
  Eigen::MatrixXd stacked(static_cast<Eigen::Index>(n_samples) * d, n);
  parallel_for(n_samples, n_threads, [&](int i) {
    RngStream rng(seed, streams::kReductionAs, static_cast<std::uint64_t>(i));
    const Eigen::VectorXd m = prior.sample(rng);
    try {
      stacked.middleRows(static_cast<Eigen::Index>(i) * d, d) = map.jacobian(m);
    } catch (const std::exception& e) {
      throw NumericalError("jacobian failed at sample " + std::to_string(i) + ": " +
                           e.what());
    }
  });

  Eigen::MatrixXd h = (stacked.transpose() * stacked) / static_cast<double>(n_samples);
  return h;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> as_basis(const Eigen::MatrixXd& h,
                                                     const GaussianSampler& prior,
                                                     int r_m) {
  const int n = prior.dim();
  if (h.rows() != n || h.cols() != n) throw ConfigError("as operator shape mismatch");
  if (r_m < 1 || r_m > n) throw ConfigError("as basis rank out of range");

  const Eigen::MatrixXd factor = prior.dense_cov_factor();
  Eigen::MatrixXd whitened = factor.transpose() * h * factor;
  whitened = 0.5 * (whitened + whitened.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(whitened);
  if (solver.info() != Eigen::Success) throw NumericalError("as eigensolve failed");

  // Eigen sorts ascending; take the trailing r_m pairs in reverse.
  Eigen::MatrixXd v(n, r_m);
  Eigen::VectorXd lambda(r_m);
  for (int k = 0; k < r_m; ++k) {
    const int src = n - 1 - k;
    lambda[k] = solver.eigenvalues()[src];
    v.col(k) = factor * solver.eigenvectors().col(src);
  }
  return {v, lambda};
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> pod_basis(const ObservableMap& map,
                                                      const GaussianSampler& prior,
                                                      int n_samples, int r_f,
                                                      std::uint64_t seed, int n_threads) {
  const int d = map.output_dim();
  if (r_f < 1 || r_f > d) throw ConfigError("pod basis rank out of range");
  if (n_samples < r_f) throw ConfigError("pod needs n_samples >= r_f");

  Eigen::MatrixXd outputs(d, n_samples);
  parallel_for(n_samples, n_threads, [&](int i) {
    RngStream rng(seed, streams::kReductionPod, static_cast<std::uint64_t>(i));
    const Eigen::VectorXd m = prior.sample(rng);
    Eigen::VectorXd f(d);
    try {
      map.evaluate(m, f);
    } catch (const std::exception& e) {
      throw NumericalError("map failed at sample " + std::to_string(i) + ": " + e.what());
    }
    outputs.col(i) = f;
  });

  Eigen::MatrixXd op = (outputs * outputs.transpose()) / static_cast<double>(n_samples);
  op = 0.5 * (op + op.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op);
  if (solver.info() != Eigen::Success) throw NumericalError("pod eigensolve failed");

  Eigen::MatrixXd phi(d, r_f);
  Eigen::VectorXd lambda(r_f);
  for (int k = 0; k < r_f; ++k) {
    const int src = d - 1 - k;
    lambda[k] = solver.eigenvalues()[src];
    phi.col(k) = solver.eigenvectors().col(src);
  }
  return {phi, lambda};
}

int energy_rank(const Eigen::VectorXd& eigs, double threshold) {
  if (eigs.size() == 0) throw ConfigError("energy_rank needs a nonempty spectrum");
  if (!(threshold > 0.0) || threshold > 1.0) {
    throw ConfigError("energy threshold must lie in (0, 1]");
  }
  const double total = eigs.sum();
  if (!(total > 0.0)) return 1;
  double acc = 0.0;
  for (int r = 0; r < eigs.size(); ++r) {
    acc += eigs[r];
    if (acc >= threshold * total) return r + 1;
  }
  return static_cast<int>(eigs.size());
}

void ReducedBases::save(const std::string& base_path) const {
  Container c;
  c.add_meta("kind", std::string("reduced_bases"));
  c.add_meta("n", static_cast<std::int64_t>(input_basis.rows()));
  c.add_meta("d", static_cast<std::int64_t>(output_basis.rows()));
  c.add_meta("r_m", static_cast<std::int64_t>(input_basis.cols()));
  c.add_meta("r_f", static_cast<std::int64_t>(output_basis.cols()));
  c.add_meta("n_samples_as", static_cast<std::int64_t>(n_samples_as));
  c.add_meta("n_samples_pod", static_cast<std::int64_t>(n_samples_pod));
  c.add_meta("seed", seed);
  c.add_block("input_basis", input_basis);
  c.add_block("input_eigs", input_eigs);
  c.add_block("output_basis", output_basis);
  c.add_block("output_eigs", output_eigs);
  save_container(base_path, c);
}

ReducedBases ReducedBases::load(const std::string& base_path) {
  const Container c = load_container(base_path);
  ReducedBases b;
  b.input_basis = c.block("input_basis");
  b.output_basis = c.block("output_basis");
  const Eigen::MatrixXd& le = c.block("input_eigs");
  const Eigen::MatrixXd& lp = c.block("output_eigs");
  b.input_eigs = Eigen::Map<const Eigen::VectorXd>(le.data(), le.size());
  b.output_eigs = Eigen::Map<const Eigen::VectorXd>(lp.data(), lp.size());
  b.n_samples_as = static_cast<int>(c.meta_int("n_samples_as"));
  b.n_samples_pod = static_cast<int>(c.meta_int("n_samples_pod"));
  b.seed = c.meta_uint("seed");
  if (b.input_basis.rows() != c.meta_int("n") || b.input_basis.cols() != c.meta_int("r_m") ||
      b.output_basis.rows() != c.meta_int("d") ||
      b.output_basis.cols() != c.meta_int("r_f") ||
      b.input_eigs.size() != b.input_basis.cols() ||
      b.output_eigs.size() != b.output_basis.cols()) {
    throw IoError("header/payload shape conflict in reduced bases " + base_path);
  }
  return b;
}

}  // namespace oedkit
