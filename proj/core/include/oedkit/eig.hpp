#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "oedkit/design.hpp"
#include "oedkit/forward_models.hpp"
#include "oedkit/prior.hpp"
#include "oedkit/projected_resnet.hpp"

namespace oedkit {

// Per-sensor independent Gaussian observation noise over all d candidates.
struct NoiseModel {
  Eigen::VectorXd sigma;

  explicit NoiseModel(Eigen::VectorXd sigma_);
  static NoiseModel uniform(double s, int d);
  int dim() const { return static_cast<int>(sigma.size()); }
};

// Evaluation interface shared by the true map and the surrogate, so the
// nested Monte Carlo estimator is agnostic to which one it queries.
class ObservableEvaluator {
 public:
  virtual ~ObservableEvaluator() = default;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual void evaluate_block(const Eigen::Ref<const Eigen::MatrixXd>& m_cols,
                              Eigen::MatrixXd& out) const = 0;
  virtual bool uses_pde_solves() const = 0;
};

class MapEvaluator : public ObservableEvaluator {
 public:
  explicit MapEvaluator(const ObservableMap& map) : map_(map) {}
  int input_dim() const override { return map_.input_dim(); }
  int output_dim() const override { return map_.output_dim(); }
  void evaluate_block(const Eigen::Ref<const Eigen::MatrixXd>& m_cols,
                      Eigen::MatrixXd& out) const override {
    map_.evaluate_block(m_cols, out);
  }
  bool uses_pde_solves() const override { return true; }
  const ObservableMap& map() const { return map_; }

 private:
  const ObservableMap& map_;
};

class SurrogateEvaluator : public ObservableEvaluator {
 public:
  explicit SurrogateEvaluator(const ProjectedResNet& net) : net_(net) {}
  int input_dim() const override { return net_.input_dim(); }
  int output_dim() const override { return net_.output_dim(); }
  void evaluate_block(const Eigen::Ref<const Eigen::MatrixXd>& m_cols,
                      Eigen::MatrixXd& out) const override {
    net_.forward_block(m_cols, out);
  }
  bool uses_pde_solves() const override { return false; }

 private:
  const ProjectedResNet& net_;
};

// Frozen outer-loop realizations: prior draws, full-candidate observables,
// and full-candidate noise, one column per outer sample. Any design reuses
// the bank through restriction, which is what makes estimates for designs
// over the same sensor set identical.
struct OuterSampleBank {
  Eigen::MatrixXd params;       // n x n_out
  Eigen::MatrixXd observables;  // d x n_out
  Eigen::MatrixXd noise;        // d x n_out

  int count() const { return static_cast<int>(params.cols()); }
};

OuterSampleBank simulate_outer_samples(const GaussianSampler& prior,
                                       const ObservableEvaluator& evaluator,
                                       const NoiseModel& noise, int n_out,
                                       std::uint64_t seed, int n_threads = 1);

// Shared inner-loop bank for the budget-matched comparisons: prior draws and
// evaluator outputs reused across outer samples and designs.
struct InnerSampleBank {
  Eigen::MatrixXd params;       // n x n_in
  Eigen::MatrixXd observables;  // d x n_in

  int count() const { return static_cast<int>(params.cols()); }
};

InnerSampleBank build_inner_bank(const GaussianSampler& prior,
                                 const ObservableEvaluator& evaluator, int n_in,
                                 std::uint64_t seed, int n_threads = 1);

// 1/2 sum_j (y_j - obs_j)^2 / sigma_j^2 over design-restricted components.
double potential(const Eigen::VectorXd& obs, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& sigma);

// log[(1/n) sum_j exp(-Phi_j)] via a min-potential shift; the Gaussian
// normalization constant is omitted consistently with the estimator's
// numerator, where it cancels.
double log_normalization(const Eigen::VectorXd& potentials);

// log-evidence for data y (full-candidate vector) restricted to a design,
// from precomputed inner observables.
double log_evidence(const Eigen::MatrixXd& inner_observables, const Eigen::VectorXd& y_full,
                    const Design& design, const NoiseModel& noise);

enum class InnerMode { kFresh, kSharedBank };

struct EigEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int n_out = 0;
  int n_in = 0;
  Eigen::VectorXd per_outer_terms;
  Eigen::VectorXd per_outer_log_norm;
  std::vector<int> design_indices;
};

struct DlmcOptions {
  int n_out = 1;
  int n_in = 1;
  std::uint64_t seed = 0;
  InnerMode inner_mode = InnerMode::kFresh;
  int n_threads = 1;
  // Optional frozen banks. When outer_bank is null one is simulated from the
  // evaluator itself (a surrogate evaluator then costs zero PDE solves).
  const OuterSampleBank* outer_bank = nullptr;
  const InnerSampleBank* inner_bank = nullptr;  // shared-bank mode only
};

// Nested (double-loop) Monte Carlo estimator of the expected information
// gain for one design. The per-outer numerator is the exact noise term
// -1/2 |W eps_i|^2 weighted by the restricted noise precision; the
// denominator is the log normalization estimated from n_in evaluator calls.
// An empty design returns exactly zero.
EigEstimate eig_dlmc(const ObservableEvaluator& evaluator, const Design& design,
                     const GaussianSampler& prior, const NoiseModel& noise,
                     const DlmcOptions& options);

// 1/2 logdet(I_r + Gn^-1/2 W G Gamma G' W' Gn^-1/2): the exact expected
// information gain for a linear map under Gaussian prior and noise.
double eig_closed_form_linear_gaussian(const Eigen::MatrixXd& g,
                                       const Eigen::MatrixXd& prior_cov,
                                       const NoiseModel& noise, const Design& design);

}  // namespace oedkit
