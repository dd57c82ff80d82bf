#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "oedkit/prior.hpp"
#include "oedkit/rng.hpp"

namespace oedkit {

class ObservableMap;

struct ResNetConfig {
  int breadth = 1;      // latent width r, equal to the retained input rank
  int depth = 1;        // residual layer count; maximum depth when adaptive
  int layer_rank = 1;   // k < breadth, rank of each residual update
  std::string activation = "tanh";
  bool adaptive = false;
};

// One low-rank residual update z -> z + w2 * act(w1 * z + b).
struct ResidualLayer {
  Eigen::MatrixXd w1;  // k x r
  Eigen::MatrixXd w2;  // r x k
  Eigen::VectorXd b;   // k
};

// Training data: one sample per column, with disjoint train/val/test splits.
struct Dataset {
  Eigen::MatrixXd inputs;   // n x N
  Eigen::MatrixXd outputs;  // d x N
  std::vector<int> train_idx, val_idx, test_idx;

  int size() const { return static_cast<int>(inputs.cols()); }
  Eigen::MatrixXd gather_inputs(const std::vector<int>& idx) const;
  Eigen::MatrixXd gather_outputs(const std::vector<int>& idx) const;

  void save(const std::string& base_path) const;
  static Dataset load(const std::string& base_path);
};

Dataset generate_dataset(const ObservableMap& map, const GaussianSampler& prior,
                         int n_samples, int n_test, double train_fraction,
                         std::uint64_t seed, int n_threads = 1);

struct TrainConfig {
  int epochs = 500;
  int batch = 32;
  double learning_rate = 1e-3;
  int patience = 20;
  double min_rel_improvement = 1e-3;  // stall = no 0.1% validation improvement
  std::uint64_t seed = 0;
};

struct TrainSummary {
  bool trained = false;
  double best_val = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
  int layers_appended = 0;
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  TrainSummary summary;
};

// Projected low-rank ResNet surrogate of a parameter-to-observable map:
//   F~(m) = Phi * f_r(V' m) + bias
// with V the input reduced basis (n x r) and Phi the output reduced basis
// (d x r_f). When r != r_f a trained linear restriction layer maps the latent
// state onto the output basis. The bases stay fixed; training adjusts the
// residual layers, the restriction, and the output bias.
//
// New layers are inserted with w2 = 0 (and w1 Glorot-initialized), so the map
// is unchanged at insertion and, with every layer in that state, the network
// is exactly the projected linear map Phi V' m + bias.
class ProjectedResNet {
 public:
  ProjectedResNet(ResNetConfig config, Eigen::MatrixXd input_basis,
                  Eigen::MatrixXd output_basis, std::uint64_t seed);

  int input_dim() const { return static_cast<int>(input_basis_.rows()); }
  int output_dim() const { return static_cast<int>(output_basis_.rows()); }
  int breadth() const { return config_.breadth; }
  int depth() const { return static_cast<int>(layers_.size()); }
  const ResNetConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  const Eigen::MatrixXd& input_basis() const { return input_basis_; }
  const Eigen::MatrixXd& output_basis() const { return output_basis_; }
  bool has_restriction() const { return restriction_.size() > 0; }
  Eigen::MatrixXd& restriction() { return restriction_; }
  const Eigen::MatrixXd& restriction() const { return restriction_; }
  ResidualLayer& layer(int i) { return layers_.at(static_cast<std::size_t>(i)); }
  const ResidualLayer& layer(int i) const { return layers_.at(static_cast<std::size_t>(i)); }
  Eigen::VectorXd& output_bias() { return output_bias_; }
  const Eigen::VectorXd& output_bias() const { return output_bias_; }
  const TrainSummary& train_summary() const { return summary_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& m) const;
  void forward_block(const Eigen::Ref<const Eigen::MatrixXd>& m_cols,
                     Eigen::MatrixXd& out) const;

  // Appends one neutral residual layer (w2 = 0): forward output is unchanged
  // for every input.
  void append_layer(std::uint64_t init_index);

  // Flattened trainable parameters, declared order:
  // per-layer (w1, w2, b), restriction if present, output bias.
  int trainable_count() const;
  Eigen::VectorXd trainable_params() const;
  void set_trainable_params(const Eigen::VectorXd& theta);

  // Backpropagated gradient of loss = scale * |F~(inputs) - targets|_F^2.
  // Returns the loss; grad must have trainable_count() entries.
  double loss_and_gradient(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                           double scale, Eigen::VectorXd& grad) const;
  double loss_only(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                   double scale) const;

  void save(const std::string& base_path) const;
  static ProjectedResNet load(const std::string& base_path);

  friend TrainReport train(ProjectedResNet& net, const Dataset& data,
                           const TrainConfig& cfg);

 private:
  ResNetConfig config_;
  Eigen::MatrixXd input_basis_;   // n x r
  Eigen::MatrixXd output_basis_;  // d x r_f
  Eigen::MatrixXd restriction_;   // r_f x r when r_f != r, else empty
  std::vector<ResidualLayer> layers_;
  Eigen::VectorXd output_bias_;   // d
  std::uint64_t seed_ = 0;
  TrainSummary summary_;
};

TrainReport train(ProjectedResNet& net, const Dataset& data, const TrainConfig& cfg);

// Column-scales an input basis so every latent coordinate has unit sample
// standard deviation over the given inputs. The span (and null space) of the
// encoder is unchanged; only its conditioning is. Prior-precision-orthonormal
// bases can otherwise produce latent coordinates with variances as large as
// the squared top covariance eigenvalue, which saturates the activations.
Eigen::MatrixXd normalize_input_basis(const Eigen::MatrixXd& input_basis,
                                      const Eigen::MatrixXd& inputs);

// Relative error between the backpropagated directional derivative of
// loss = |F~(m) - target|^2 and a central finite difference (step 1e-6).
double gradient_check(const ProjectedResNet& net, const Eigen::VectorXd& m,
                      const Eigen::VectorXd& target, const Eigen::VectorXd& direction);
double gradient_check(const ProjectedResNet& net, const Eigen::VectorXd& m,
                      const Eigen::VectorXd& direction);

// 100 * (1 - |F~ - F|_2 / |F|_2) with norms stacked over test samples.
double l2_accuracy_percent(const ProjectedResNet& net, const ObservableMap& map,
                           const Eigen::MatrixXd& test_inputs);
double l2_accuracy_percent(const ProjectedResNet& net, const Eigen::MatrixXd& test_inputs,
                           const Eigen::MatrixXd& true_outputs);

}  // namespace oedkit
