#include "oedkit/eig.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "oedkit/errors.hpp"
#include "oedkit/parallel.hpp"

namespace oedkit {

NoiseModel::NoiseModel(Eigen::VectorXd sigma_) : sigma(std::move(sigma_)) {
  if (sigma.size() == 0) throw ConfigError("noise model needs at least one sensor");
  if (!(sigma.minCoeff() > 0.0)) {
    throw ConfigError("noise standard deviations must be positive");
  }
}

NoiseModel NoiseModel::uniform(double s, int d) {
  return NoiseModel(Eigen::VectorXd::Constant(d, s));
}

double potential(const Eigen::VectorXd& obs, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& sigma) {
  if (obs.size() != y.size() || obs.size() != sigma.size()) {
    throw ConfigError("potential length mismatch");
  }
  double acc = 0.0;
  for (Eigen::Index j = 0; j < obs.size(); ++j) {
    const double r = (y[j] - obs[j]) / sigma[j];
    acc += r * r;
  }
  return 0.5 * acc;
}

double log_normalization(const Eigen::VectorXd& potentials) {
  const Eigen::Index n = potentials.size();
  if (n == 0) throw ConfigError("log_normalization needs at least one potential");
  const double shift = potentials.minCoeff();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) acc += std::exp(-(potentials[j] - shift));
  return -shift + std::log(acc / static_cast<double>(n));
}

namespace {

// Potential restricted to a sorted sensor subset, computed from
// full-candidate vectors. Summation in sorted index order makes the result
// independent of the selection order stored in the design.
double restricted_potential(const Eigen::VectorXd& obs_full, const Eigen::VectorXd& y_full,
                            const std::vector<int>& sorted_sel,
                            const Eigen::VectorXd& sigma) {
  double acc = 0.0;
  for (int j : sorted_sel) {
    const double r = (y_full[j] - obs_full[j]) / sigma[j];
    acc += r * r;
  }
  return 0.5 * acc;
}

constexpr int kInnerBlock = 1024;

}  // namespace

OuterSampleBank simulate_outer_samples(const GaussianSampler& prior,
                                       const ObservableEvaluator& evaluator,
                                       const NoiseModel& noise, int n_out,
                                       std::uint64_t seed, int n_threads) {
  if (n_out < 1) throw ConfigError("outer bank needs n_out >= 1");
  const int n = prior.dim();
  const int d = evaluator.output_dim();
  if (noise.dim() != d) throw ConfigError("noise dimension does not match evaluator");

  OuterSampleBank bank;
  bank.params.resize(n, n_out);
  bank.observables.resize(d, n_out);
  bank.noise.resize(d, n_out);

  parallel_for(n_out, n_threads, [&](int i) {
    RngStream param_rng(seed, streams::kOuterParam, static_cast<std::uint64_t>(i));
    prior.sample_block(param_rng, bank.params.col(i));
    RngStream noise_rng(seed, streams::kOuterNoise, static_cast<std::uint64_t>(i));
    for (int j = 0; j < d; ++j) bank.noise(j, i) = noise.sigma[j] * noise_rng.normal();
    Eigen::MatrixXd out(d, 1);
    evaluator.evaluate_block(bank.params.col(i), out);
    if (!out.allFinite()) {
      throw NumericalError("non-finite observable at outer sample " + std::to_string(i));
    }
    bank.observables.col(i) = out.col(0);
  });
  return bank;
}

InnerSampleBank build_inner_bank(const GaussianSampler& prior,
                                 const ObservableEvaluator& evaluator, int n_in,
                                 std::uint64_t seed, int n_threads) {
  if (n_in < 1) throw ConfigError("inner bank needs n_in >= 1");
  InnerSampleBank bank;
  bank.params.resize(prior.dim(), n_in);
  bank.observables.resize(evaluator.output_dim(), n_in);

  const int n_blocks = (n_in + kInnerBlock - 1) / kInnerBlock;
  parallel_for(n_blocks, n_threads, [&](int blk) {
    const int start = blk * kInnerBlock;
    const int count = std::min(kInnerBlock, n_in - start);
    RngStream rng(seed, streams::kInnerShared, static_cast<std::uint64_t>(blk));
    prior.sample_block(rng, bank.params.middleCols(start, count));
    Eigen::MatrixXd out;
    evaluator.evaluate_block(bank.params.middleCols(start, count), out);
    bank.observables.middleCols(start, count) = out;
  });
  return bank;
}

double log_evidence(const Eigen::MatrixXd& inner_observables, const Eigen::VectorXd& y_full,
                    const Design& design, const NoiseModel& noise) {
  const std::vector<int> sel = design.sorted_indices();
  const Eigen::Index n_in = inner_observables.cols();
  Eigen::VectorXd pots(n_in);
  for (Eigen::Index j = 0; j < n_in; ++j) {
    pots[j] = restricted_potential(inner_observables.col(j), y_full, sel, noise.sigma);
  }
  return log_normalization(pots);
}

EigEstimate eig_dlmc(const ObservableEvaluator& evaluator, const Design& design,
                     const GaussianSampler& prior, const NoiseModel& noise,
                     const DlmcOptions& options) {
  if (options.n_out < 1 || options.n_in < 1) {
    throw ConfigError("dlmc needs n_out >= 1 and n_in >= 1");
  }
  if (noise.dim() != evaluator.output_dim()) {
    throw ConfigError("noise dimension does not match evaluator");
  }
  if (design.d != evaluator.output_dim()) {
    throw ConfigError("design candidate count does not match evaluator");
  }

  EigEstimate est;
  est.design_indices = design.indices;
  est.n_out = options.n_out;
  est.n_in = options.n_in;

  // No data, no information.
  if (design.empty()) {
    est.per_outer_terms = Eigen::VectorXd::Zero(options.n_out);
    est.per_outer_log_norm = Eigen::VectorXd::Zero(options.n_out);
    return est;
  }

  OuterSampleBank local_bank;
  const OuterSampleBank* bank = options.outer_bank;
  if (bank == nullptr) {
    local_bank = simulate_outer_samples(prior, evaluator, noise, options.n_out,
                                        options.seed, options.n_threads);
    bank = &local_bank;
  }
  if (bank->count() < options.n_out) {
    throw ConfigError("outer bank smaller than requested n_out");
  }

  InnerSampleBank local_inner;
  const InnerSampleBank* inner = options.inner_bank;
  if (options.inner_mode == InnerMode::kSharedBank && inner == nullptr) {
    local_inner = build_inner_bank(prior, evaluator, options.n_in, options.seed,
                                   options.n_threads);
    inner = &local_inner;
  }
  const int n_in = (inner != nullptr) ? inner->count() : options.n_in;
  est.n_in = n_in;

  const std::vector<int> sel = design.sorted_indices();
  const int n = prior.dim();

  est.per_outer_terms.resize(options.n_out);
  est.per_outer_log_norm.resize(options.n_out);

  parallel_for(options.n_out, options.n_threads, [&](int i) {
    // y_i = W (F_i + eps_i), handled through full-candidate vectors.
    const Eigen::VectorXd y_full = bank->observables.col(i) + bank->noise.col(i);

    Eigen::VectorXd pots(n_in);
    if (inner != nullptr) {
      for (int j = 0; j < n_in; ++j) {
        pots[j] = restricted_potential(inner->observables.col(j), y_full, sel, noise.sigma);
      }
    } else {
      RngStream rng(options.seed, streams::kInnerParam, static_cast<std::uint64_t>(i));
      Eigen::MatrixXd params(n, std::min(kInnerBlock, n_in));
      Eigen::MatrixXd outs;
      int done = 0;
      while (done < n_in) {
        const int count = std::min(kInnerBlock, n_in - done);
        auto block = params.leftCols(count);
        prior.sample_block(rng, block);
        evaluator.evaluate_block(params.leftCols(count), outs);
        for (int c = 0; c < count; ++c) {
          pots[done + c] = restricted_potential(outs.col(c), y_full, sel, noise.sigma);
        }
        done += count;
      }
    }

    // Numerator: -1/2 |W eps_i|^2 in the restricted noise weighting, computed
    // as the potential of the bank observable against y_i so that an
    // evaluator reproducing the bank cancels it bitwise.
    const double log_norm = log_normalization(pots);
    const double numerator =
        -restricted_potential(bank->observables.col(i), y_full, sel, noise.sigma);
    est.per_outer_log_norm[i] = log_norm;
    est.per_outer_terms[i] = numerator - log_norm;
  });

  est.value = est.per_outer_terms.mean();
  if (options.n_out > 1) {
    const double var =
        (est.per_outer_terms.array() - est.value).square().sum() /
        static_cast<double>(options.n_out - 1);
    est.std_error = std::sqrt(var / static_cast<double>(options.n_out));
  }
  return est;
}

double eig_closed_form_linear_gaussian(const Eigen::MatrixXd& g,
                                       const Eigen::MatrixXd& prior_cov,
                                       const NoiseModel& noise, const Design& design) {
  if (g.rows() != design.d || g.rows() != noise.dim()) {
    throw ConfigError("closed form shape mismatch");
  }
  if (design.empty()) return 0.0;

  const std::vector<int> sel = design.sorted_indices();
  const int r = static_cast<int>(sel.size());
  Eigen::MatrixXd a(r, g.cols());
  for (int i = 0; i < r; ++i) a.row(i) = g.row(sel[static_cast<std::size_t>(i)]) / noise.sigma[sel[static_cast<std::size_t>(i)]];

  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(r, r) + a * prior_cov * a.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("closed-form information matrix is not positive definite");
  }
  const Eigen::MatrixXd chol_factor = llt.matrixL();
  double half_logdet = 0.0;
  for (int i = 0; i < r; ++i) half_logdet += std::log(chol_factor(i, i));
  return half_logdet;
}

}  // namespace oedkit
