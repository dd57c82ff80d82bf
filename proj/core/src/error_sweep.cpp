#include "oedkit/error_sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "oedkit/errors.hpp"
#include "oedkit/parallel.hpp"

namespace oedkit {

double generalization_error(const ObservableEvaluator& approx,
                            const ObservableEvaluator& truth,
                            const Eigen::MatrixXd& test_inputs) {
  if (test_inputs.cols() == 0) {
    throw ConfigError("generalization error needs a nonempty test set");
  }
  Eigen::MatrixXd fa, ft;
  approx.evaluate_block(test_inputs, fa);
  truth.evaluate_block(test_inputs, ft);
  const double mean_sq =
      (fa - ft).squaredNorm() / static_cast<double>(test_inputs.cols());
  return std::sqrt(mean_sq);
}

ErrorSweepReport bound_sweep(const std::vector<SweepSurrogate>& surrogates,
                             const ObservableMap& truth, const GaussianSampler& prior,
                             const NoiseModel& noise, const std::vector<Design>& designs,
                             int n_out, int n_in, std::uint64_t seed, int n_threads,
                             int n_test) {
  if (surrogates.size() < 2) {
    throw ConfigError("bound_sweep needs at least 2 surrogates");
  }
  if (designs.empty()) throw ConfigError("bound_sweep needs at least one design");

  const MapEvaluator truth_eval(truth);

  // Frozen banks: outer realizations from the true map, one shared inner
  // parameter bank. Every estimator below sees exactly these samples.
  const OuterSampleBank outer =
      simulate_outer_samples(prior, truth_eval, noise, n_out, seed, n_threads);
  const InnerSampleBank inner_true =
      build_inner_bank(prior, truth_eval, n_in, seed, n_threads);

  // Test inputs for the generalization error measurement.
  Eigen::MatrixXd test_inputs(prior.dim(), n_test);
  {
    RngStream rng(seed, streams::kTestInputs);
    prior.sample_block(rng, test_inputs);
  }
  Eigen::MatrixXd test_truth;
  truth_eval.evaluate_block(test_inputs, test_truth);

  DlmcOptions base;
  base.n_out = n_out;
  base.n_in = n_in;
  base.seed = seed;
  base.inner_mode = InnerMode::kSharedBank;
  base.n_threads = n_threads;
  base.outer_bank = &outer;

  ErrorSweepReport report;
  report.n_out = n_out;
  report.n_in = n_in;
  report.n_designs = static_cast<int>(designs.size());

  // Reference estimates with the true map, one per design.
  std::vector<EigEstimate> ref(designs.size());
  for (std::size_t k = 0; k < designs.size(); ++k) {
    DlmcOptions opt = base;
    opt.inner_bank = &inner_true;
    ref[k] = eig_dlmc(truth_eval, designs[k], prior, noise, opt);
  }

  report.c_hat = 0.0;
  report.c_hat_lognorm = 0.0;
  for (const auto& s : surrogates) {
    SurrogateSweepRecord rec;
    rec.id = s.id;
    rec.breadth = s.breadth;

    Eigen::MatrixXd test_approx;
    s.evaluator->evaluate_block(test_inputs, test_approx);
    rec.epsilon_hat = std::sqrt((test_approx - test_truth).squaredNorm() /
                                static_cast<double>(n_test));
    const double ref_norm = test_truth.norm();
    rec.l2_accuracy =
        ref_norm > 0.0 ? 100.0 * (1.0 - (test_approx - test_truth).norm() / ref_norm)
                       : 0.0;

    // Surrogate observables on the same inner parameters.
    InnerSampleBank inner_surr;
    inner_surr.params = inner_true.params;
    s.evaluator->evaluate_block(inner_true.params, inner_surr.observables);

    double lognorm_sum = 0.0;
    std::size_t lognorm_count = 0;
    for (std::size_t k = 0; k < designs.size(); ++k) {
      DlmcOptions opt = base;
      opt.inner_bank = &inner_surr;
      const EigEstimate est = eig_dlmc(*s.evaluator, designs[k], prior, noise, opt);

      const double eig_err = std::abs(est.value - ref[k].value);
      rec.per_design_eig_error.push_back(eig_err);
      rec.max_eig_error = std::max(rec.max_eig_error, eig_err);

      double design_lognorm_sum = 0.0;
      for (int i = 0; i < n_out; ++i) {
        const double err =
            std::abs(est.per_outer_log_norm[i] - ref[k].per_outer_log_norm[i]);
        design_lognorm_sum += err;
        rec.max_lognorm_error = std::max(rec.max_lognorm_error, err);
        if (rec.epsilon_hat > 0.0) {
          report.c_hat_lognorm = std::max(report.c_hat_lognorm, err / rec.epsilon_hat);
        }
      }
      rec.per_design_mean_lognorm_error.push_back(design_lognorm_sum / n_out);
      lognorm_sum += design_lognorm_sum;
      lognorm_count += static_cast<std::size_t>(n_out);

      if (rec.epsilon_hat > 0.0) {
        report.c_hat = std::max(report.c_hat, eig_err / rec.epsilon_hat);
      }
    }
    rec.mean_lognorm_error = lognorm_sum / static_cast<double>(lognorm_count);
    rec.mean_eig_error = 0.0;
    for (double e : rec.per_design_eig_error) rec.mean_eig_error += e;
    rec.mean_eig_error /= static_cast<double>(rec.per_design_eig_error.size());

    report.records.push_back(std::move(rec));
  }

  // Least-squares slope of log(mean EIG error) against log(eps), over
  // surrogates with positive error.
  std::vector<double> xs, ys;
  for (const auto& rec : report.records) {
    if (rec.epsilon_hat > 0.0 && rec.mean_eig_error > 0.0) {
      xs.push_back(std::log(rec.epsilon_hat));
      ys.push_back(std::log(rec.mean_eig_error));
    }
  }
  std::vector<double> distinct = xs;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 distinct.end());
  if (distinct.size() < 2) {
    throw ConfigError(
        "degenerate fit: need at least 2 surrogates with distinct nonzero "
        "generalization error");
  }
  const double x_mean =
      std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  const double y_mean =
      std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - x_mean) * (xs[i] - x_mean);
    sxy += (xs[i] - x_mean) * (ys[i] - y_mean);
  }
  report.slope = sxy / sxx;
  report.spans_decade =
      (distinct.back() - distinct.front()) >= std::log(10.0) - 1e-12;
  return report;
}

}  // namespace oedkit
