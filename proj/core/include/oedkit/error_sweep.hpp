#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "oedkit/design.hpp"
#include "oedkit/eig.hpp"

namespace oedkit {

// RMS generalization error sqrt(mean_i |F(m_i) - F~(m_i)|^2) over a test set.
double generalization_error(const ObservableEvaluator& approx,
                            const ObservableEvaluator& truth,
                            const Eigen::MatrixXd& test_inputs);

struct SurrogateSweepRecord {
  std::string id;
  int breadth = 0;
  double epsilon_hat = 0.0;
  double l2_accuracy = 0.0;
  double mean_lognorm_error = 0.0;
  double max_lognorm_error = 0.0;
  double mean_eig_error = 0.0;
  double max_eig_error = 0.0;
  std::vector<double> per_design_eig_error;
  std::vector<double> per_design_mean_lognorm_error;
};

struct ErrorSweepReport {
  std::vector<SurrogateSweepRecord> records;
  double slope = 0.0;            // least-squares log-log slope of EIG error vs eps
  double c_hat = 0.0;            // max |Psi_dl - Psi_nn| / eps over everything
  double c_hat_lognorm = 0.0;    // max per-outer |log pi_hat - log pi~| / eps
  bool spans_decade = false;     // fitted eps values cover at least one decade
  int n_out = 0;
  int n_in = 0;
  int n_designs = 0;
};

struct SweepSurrogate {
  const ObservableEvaluator* evaluator = nullptr;
  std::string id;
  int breadth = 0;
};

// Empirical check of the surrogate-to-EIG error propagation: for every
// surrogate and design, compares the log normalization terms and the EIG
// estimates against the true map on identical frozen outer and inner sample
// banks, so the differences isolate the surrogate error. Fits the log-log
// slope of the design-averaged EIG error against the measured generalization
// error and reports the observed bound constants as max ratios.
ErrorSweepReport bound_sweep(const std::vector<SweepSurrogate>& surrogates,
                             const ObservableMap& truth, const GaussianSampler& prior,
                             const NoiseModel& noise, const std::vector<Design>& designs,
                             int n_out, int n_in, std::uint64_t seed, int n_threads = 1,
                             int n_test = 128);

}  // namespace oedkit
