#include "oedkit/projected_resnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "oedkit/container.hpp"
#include "oedkit/errors.hpp"
#include "oedkit/forward_models.hpp"
#include "oedkit/parallel.hpp"

namespace oedkit {

namespace {

Eigen::MatrixXd glorot_uniform(int rows, int cols, RngStream& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd w(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) w(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
  return w;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset

Eigen::MatrixXd Dataset::gather_inputs(const std::vector<int>& idx) const {
  Eigen::MatrixXd out(inputs.rows(), idx.size());
  for (std::size_t c = 0; c < idx.size(); ++c) out.col(c) = inputs.col(idx[c]);
  return out;
}

Eigen::MatrixXd Dataset::gather_outputs(const std::vector<int>& idx) const {
  Eigen::MatrixXd out(outputs.rows(), idx.size());
  for (std::size_t c = 0; c < idx.size(); ++c) out.col(c) = outputs.col(idx[c]);
  return out;
}

namespace {

Eigen::MatrixXd indices_to_block(const std::vector<int>& idx) {
  Eigen::MatrixXd m(1, idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) m(0, i) = idx[i];
  return m;
}

std::vector<int> block_to_indices(const Eigen::MatrixXd& m) {
  std::vector<int> idx(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) idx[static_cast<std::size_t>(i)] =
      static_cast<int>(m(i / m.cols(), i % m.cols()));
  return idx;
}

}  // namespace

void Dataset::save(const std::string& base_path) const {
  Container c;
  c.add_meta("kind", std::string("dataset"));
  c.add_meta("n_samples", static_cast<std::int64_t>(size()));
  c.add_meta("input_dim", static_cast<std::int64_t>(inputs.rows()));
  c.add_meta("output_dim", static_cast<std::int64_t>(outputs.rows()));
  // Documented on-disk shapes are samples x dim.
  c.add_block("inputs", Eigen::MatrixXd(inputs.transpose()));
  c.add_block("outputs", Eigen::MatrixXd(outputs.transpose()));
  c.add_block("train_idx", indices_to_block(train_idx));
  c.add_block("val_idx", indices_to_block(val_idx));
  c.add_block("test_idx", indices_to_block(test_idx));
  save_container(base_path, c);
}

Dataset Dataset::load(const std::string& base_path) {
  const Container c = load_container(base_path);
  Dataset d;
  d.inputs = c.block("inputs").transpose();
  d.outputs = c.block("outputs").transpose();
  d.train_idx = block_to_indices(c.block("train_idx"));
  d.val_idx = block_to_indices(c.block("val_idx"));
  d.test_idx = block_to_indices(c.block("test_idx"));
  if (d.inputs.cols() != d.outputs.cols() || d.inputs.cols() != c.meta_int("n_samples")) {
    throw IoError("header/payload shape conflict in dataset " + base_path);
  }
  return d;
}

Dataset generate_dataset(const ObservableMap& map, const GaussianSampler& prior,
                         int n_samples, int n_test, double train_fraction,
                         std::uint64_t seed, int n_threads) {
  if (n_samples < 1) throw ConfigError("dataset needs n_samples >= 1");
  if (n_test < 0 || n_test >= n_samples) {
    throw ConfigError("dataset test count must lie in [0, n_samples)");
  }
  if (!(train_fraction > 0.0) || train_fraction > 1.0) {
    throw ConfigError("train fraction must lie in (0, 1]");
  }

  Dataset data;
  data.inputs.resize(map.input_dim(), n_samples);
  data.outputs.resize(map.output_dim(), n_samples);
  parallel_for(n_samples, n_threads, [&](int i) {
    RngStream rng(seed, streams::kDatasetParam, static_cast<std::uint64_t>(i));
    const Eigen::VectorXd m = prior.sample(rng);
    Eigen::VectorXd f(map.output_dim());
    map.evaluate(m, f);
    if (!f.allFinite()) {
      throw NumericalError("non-finite observable at dataset sample " + std::to_string(i));
    }
    data.inputs.col(i) = m;
    data.outputs.col(i) = f;
  });

  std::vector<int> perm(static_cast<std::size_t>(n_samples));
  std::iota(perm.begin(), perm.end(), 0);
  RngStream shuffle_rng(seed, streams::kSplitShuffle);
  std::shuffle(perm.begin(), perm.end(), shuffle_rng.engine());

  const int n_fit = n_samples - n_test;
  const int n_train = std::max(1, static_cast<int>(std::lround(train_fraction * n_fit)));
  for (int i = 0; i < n_samples; ++i) {
    if (i < std::min(n_train, n_fit)) {
      data.train_idx.push_back(perm[static_cast<std::size_t>(i)]);
    } else if (i < n_fit) {
      data.val_idx.push_back(perm[static_cast<std::size_t>(i)]);
    } else {
      data.test_idx.push_back(perm[static_cast<std::size_t>(i)]);
    }
  }
  return data;
}

// ---------------------------------------------------------------------------
// ProjectedResNet

ProjectedResNet::ProjectedResNet(ResNetConfig config, Eigen::MatrixXd input_basis,
                                 Eigen::MatrixXd output_basis, std::uint64_t seed)
    : config_(std::move(config)),
      input_basis_(std::move(input_basis)),
      output_basis_(std::move(output_basis)),
      seed_(seed) {
  if (config_.breadth < 1) throw ConfigError("network breadth must be >= 1");
  if (config_.depth < 1) throw ConfigError("network depth must be >= 1");
  if (config_.layer_rank < 1 || config_.layer_rank >= config_.breadth) {
    throw ConfigError("layer rank must satisfy 1 <= k < breadth");
  }
  if (config_.activation != "tanh") {
    throw ConfigError("unsupported activation '" + config_.activation + "'");
  }
  if (input_basis_.cols() != config_.breadth) {
    throw ConfigError("input basis column count must equal breadth");
  }
  const int r_f = static_cast<int>(output_basis_.cols());
  if (r_f != config_.breadth) {
    // Linear restriction (or prolongation) onto the output basis rank,
    // initialized as the truncated identity.
    restriction_ = Eigen::MatrixXd::Zero(r_f, config_.breadth);
    for (int i = 0; i < std::min(r_f, config_.breadth); ++i) restriction_(i, i) = 1.0;
  }
  output_bias_ = Eigen::VectorXd::Zero(output_basis_.rows());

  const int initial_depth = config_.adaptive ? 1 : config_.depth;
  for (int i = 0; i < initial_depth; ++i) append_layer(static_cast<std::uint64_t>(i));
}

void ProjectedResNet::append_layer(std::uint64_t init_index) {
  if (static_cast<int>(layers_.size()) >= config_.depth && config_.adaptive) {
    throw ConfigError("cannot append beyond the configured maximum depth");
  }
  RngStream rng(seed_, streams::kWeightInit, init_index);
  ResidualLayer layer;
  layer.w1 = glorot_uniform(config_.layer_rank, config_.breadth, rng);
  layer.w2 = Eigen::MatrixXd::Zero(config_.breadth, config_.layer_rank);
  layer.b = Eigen::VectorXd::Zero(config_.layer_rank);
  layers_.push_back(std::move(layer));
}

Eigen::VectorXd ProjectedResNet::forward(const Eigen::VectorXd& m) const {
  Eigen::MatrixXd out;
  forward_block(m, out);
  return out.col(0);
}

void ProjectedResNet::forward_block(const Eigen::Ref<const Eigen::MatrixXd>& m_cols,
                                    Eigen::MatrixXd& out) const {
  if (m_cols.rows() != input_basis_.rows()) {
    throw ConfigError("surrogate input length mismatch");
  }
  Eigen::MatrixXd z = input_basis_.transpose() * m_cols;
  for (const auto& layer : layers_) {
    Eigen::MatrixXd h = layer.w1 * z;
    h.colwise() += layer.b;
    z.noalias() += layer.w2 * h.array().tanh().matrix();
  }
  if (has_restriction()) {
    out.noalias() = output_basis_ * (restriction_ * z);
  } else {
    out.noalias() = output_basis_ * z;
  }
  out.colwise() += output_bias_;
}

int ProjectedResNet::trainable_count() const {
  const int k = config_.layer_rank;
  const int r = config_.breadth;
  int count = depth() * (k * r + r * k + k);
  count += static_cast<int>(restriction_.size());
  count += static_cast<int>(output_bias_.size());
  return count;
}

namespace {

void pack(const Eigen::MatrixXd& m, Eigen::VectorXd& theta, int& pos) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) theta[pos++] = m(r, c);
}

void unpack(Eigen::MatrixXd& m, const Eigen::VectorXd& theta, int& pos) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = theta[pos++];
}

void unpack(Eigen::VectorXd& v, const Eigen::VectorXd& theta, int& pos) {
  for (Eigen::Index r = 0; r < v.size(); ++r) v[r] = theta[pos++];
}

}  // namespace

Eigen::VectorXd ProjectedResNet::trainable_params() const {
  Eigen::VectorXd theta(trainable_count());
  int pos = 0;
  for (const auto& layer : layers_) {
    pack(layer.w1, theta, pos);
    pack(layer.w2, theta, pos);
    pack(layer.b, theta, pos);
  }
  if (has_restriction()) pack(restriction_, theta, pos);
  pack(output_bias_, theta, pos);
  return theta;
}

void ProjectedResNet::set_trainable_params(const Eigen::VectorXd& theta) {
  if (theta.size() != trainable_count()) {
    throw ConfigError("trainable parameter vector length mismatch");
  }
  int pos = 0;
  for (auto& layer : layers_) {
    unpack(layer.w1, theta, pos);
    unpack(layer.w2, theta, pos);
    Eigen::VectorXd b = layer.b;
    unpack(b, theta, pos);
    layer.b = b;
  }
  if (has_restriction()) unpack(restriction_, theta, pos);
  Eigen::VectorXd bias = output_bias_;
  unpack(bias, theta, pos);
  output_bias_ = bias;
}

double ProjectedResNet::loss_only(const Eigen::MatrixXd& inputs,
                                  const Eigen::MatrixXd& targets, double scale) const {
  Eigen::MatrixXd out;
  forward_block(inputs, out);
  return scale * (out - targets).squaredNorm();
}

double ProjectedResNet::loss_and_gradient(const Eigen::MatrixXd& inputs,
                                          const Eigen::MatrixXd& targets, double scale,
                                          Eigen::VectorXd& grad) const {
  const int L = depth();

  // Forward pass keeping per-layer latent states and activations.
  std::vector<Eigen::MatrixXd> z_states(static_cast<std::size_t>(L) + 1);
  std::vector<Eigen::MatrixXd> acts(static_cast<std::size_t>(L));
  z_states[0] = input_basis_.transpose() * inputs;
  for (int i = 0; i < L; ++i) {
    const auto& layer = layers_[static_cast<std::size_t>(i)];
    Eigen::MatrixXd h = layer.w1 * z_states[static_cast<std::size_t>(i)];
    h.colwise() += layer.b;
    acts[static_cast<std::size_t>(i)] = h.array().tanh().matrix();
    z_states[static_cast<std::size_t>(i) + 1] =
        z_states[static_cast<std::size_t>(i)] +
        layer.w2 * acts[static_cast<std::size_t>(i)];
  }
  Eigen::MatrixXd out;
  if (has_restriction()) {
    out.noalias() = output_basis_ * (restriction_ * z_states[static_cast<std::size_t>(L)]);
  } else {
    out.noalias() = output_basis_ * z_states[static_cast<std::size_t>(L)];
  }
  out.colwise() += output_bias_;

  const Eigen::MatrixXd err = out - targets;
  const double loss = scale * err.squaredNorm();

  // Backward pass.
  grad.resize(trainable_count());
  const Eigen::MatrixXd g_out = (2.0 * scale) * err;  // d x B
  const Eigen::VectorXd grad_bias = g_out.rowwise().sum();

  Eigen::MatrixXd grad_restriction;
  Eigen::MatrixXd g_z;
  if (has_restriction()) {
    const Eigen::MatrixXd phi_g = output_basis_.transpose() * g_out;  // r_f x B
    grad_restriction.noalias() =
        phi_g * z_states[static_cast<std::size_t>(L)].transpose();
    g_z.noalias() = restriction_.transpose() * phi_g;
  } else {
    g_z.noalias() = output_basis_.transpose() * g_out;
  }

  std::vector<Eigen::MatrixXd> grad_w1(static_cast<std::size_t>(L)),
      grad_w2(static_cast<std::size_t>(L));
  std::vector<Eigen::VectorXd> grad_b(static_cast<std::size_t>(L));
  for (int i = L - 1; i >= 0; --i) {
    const auto& layer = layers_[static_cast<std::size_t>(i)];
    const auto& a = acts[static_cast<std::size_t>(i)];
    Eigen::MatrixXd gh = layer.w2.transpose() * g_z;                 // k x B
    gh.array() *= (1.0 - a.array().square());
    grad_w2[static_cast<std::size_t>(i)].noalias() = g_z * a.transpose();
    grad_w1[static_cast<std::size_t>(i)].noalias() =
        gh * z_states[static_cast<std::size_t>(i)].transpose();
    grad_b[static_cast<std::size_t>(i)] = gh.rowwise().sum();
    g_z.noalias() += layer.w1.transpose() * gh;
  }

  int pos = 0;
  for (int i = 0; i < L; ++i) {
    pack(grad_w1[static_cast<std::size_t>(i)], grad, pos);
    pack(grad_w2[static_cast<std::size_t>(i)], grad, pos);
    pack(grad_b[static_cast<std::size_t>(i)], grad, pos);
  }
  if (has_restriction()) pack(grad_restriction, grad, pos);
  pack(grad_bias, grad, pos);
  return loss;
}

// ---------------------------------------------------------------------------
// Training

namespace {

// Adam state per tensor; new tensors join with fresh moments when a layer is
// appended mid-training.
struct AdamTensor {
  Eigen::VectorXd m, v;
  std::int64_t t = 0;
};

struct AdamState {
  std::vector<AdamTensor> tensors;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  void ensure(std::size_t count, const std::vector<int>& sizes) {
    while (tensors.size() < count) {
      AdamTensor at;
      const int sz = sizes[tensors.size()];
      at.m = Eigen::VectorXd::Zero(sz);
      at.v = Eigen::VectorXd::Zero(sz);
      tensors.push_back(std::move(at));
    }
  }

  void step(std::size_t tensor, Eigen::Ref<Eigen::VectorXd> theta,
            const Eigen::Ref<const Eigen::VectorXd>& grad, double lr) {
    AdamTensor& at = tensors[tensor];
    at.t += 1;
    at.m = beta1 * at.m + (1.0 - beta1) * grad;
    at.v = beta2 * at.v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(at.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(at.t));
    theta -= (lr / bc1) * at.m.cwiseQuotient(
        ((at.v / bc2).cwiseSqrt().array() + eps).matrix());
  }
};

struct Snapshot {
  std::vector<ResidualLayer> layers;
  Eigen::MatrixXd restriction;
  Eigen::VectorXd output_bias;
};

// Tensor partition of the flat parameter vector: per-layer w1, w2, b,
// then restriction (if any), then output bias.
std::vector<int> tensor_sizes(const ProjectedResNet& net) {
  const int k = net.config().layer_rank;
  const int r = net.breadth();
  std::vector<int> sizes;
  for (int i = 0; i < net.depth(); ++i) {
    sizes.push_back(k * r);
    sizes.push_back(r * k);
    sizes.push_back(k);
  }
  if (net.has_restriction()) {
    sizes.push_back(static_cast<int>(net.restriction().size()));
  }
  sizes.push_back(net.output_dim());
  return sizes;
}

}  // namespace

TrainReport train(ProjectedResNet& net, const Dataset& data, const TrainConfig& cfg) {
  if (data.train_idx.empty()) throw ConfigError("training split is empty");
  if (data.inputs.rows() != net.input_dim() || data.outputs.rows() != net.output_dim()) {
    throw ConfigError("dataset dimensions do not match the network");
  }
  if (cfg.epochs < 1 || cfg.batch < 1 || cfg.patience < 1 || !(cfg.learning_rate > 0.0)) {
    throw ConfigError("invalid training configuration");
  }

  const Eigen::MatrixXd train_in = data.gather_inputs(data.train_idx);
  const Eigen::MatrixXd train_out = data.gather_outputs(data.train_idx);
  const bool has_val = !data.val_idx.empty();
  const Eigen::MatrixXd val_in = has_val ? data.gather_inputs(data.val_idx) : train_in;
  const Eigen::MatrixXd val_out = has_val ? data.gather_outputs(data.val_idx) : train_out;
  const int n_train = static_cast<int>(train_in.cols());
  const double d_out = static_cast<double>(net.output_dim());

  // Output bias starts at the training-output mean.
  net.output_bias_ = train_out.rowwise().mean();

  TrainReport report;
  AdamState adam;
  Snapshot best{net.layers_, net.restriction_, net.output_bias_};
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int stall = 0;
  int appended = 0;

  std::vector<int> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), 0);

  Eigen::VectorXd theta = net.trainable_params();
  Eigen::VectorXd grad(theta.size());

  int epoch = 0;
  for (; epoch < cfg.epochs; ++epoch) {
    RngStream shuffle_rng(cfg.seed, streams::kBatchShuffle, static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

    double epoch_loss = 0.0;
    int n_batches = 0;
    for (int start = 0; start < n_train; start += cfg.batch) {
      const int b = std::min(cfg.batch, n_train - start);
      Eigen::MatrixXd bin(net.input_dim(), b);
      Eigen::MatrixXd bout(net.output_dim(), b);
      for (int c = 0; c < b; ++c) {
        bin.col(c) = train_in.col(order[static_cast<std::size_t>(start + c)]);
        bout.col(c) = train_out.col(order[static_cast<std::size_t>(start + c)]);
      }
      const double scale = 1.0 / (static_cast<double>(b) * d_out);
      const double loss = net.loss_and_gradient(bin, bout, scale, grad);
      if (!std::isfinite(loss)) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      epoch_loss += loss;
      ++n_batches;

      const std::vector<int> sizes = tensor_sizes(net);
      adam.ensure(sizes.size(), sizes);
      theta = net.trainable_params();
      int pos = 0;
      for (std::size_t t = 0; t < sizes.size(); ++t) {
        adam.step(t, theta.segment(pos, sizes[t]), grad.segment(pos, sizes[t]),
                  cfg.learning_rate);
        pos += sizes[t];
      }
      net.set_trainable_params(theta);
    }
    report.train_loss.push_back(epoch_loss / std::max(1, n_batches));

    const double val_scale = 1.0 / (static_cast<double>(val_in.cols()) * d_out);
    const double val_loss = net.loss_only(val_in, val_out, val_scale);
    if (!std::isfinite(val_loss)) {
      throw NumericalError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    report.val_loss.push_back(val_loss);

    const bool significant =
        best_epoch < 0 || val_loss < best_val * (1.0 - cfg.min_rel_improvement);
    if (best_epoch < 0 || val_loss < best_val) {
      best_val = val_loss;
      best_epoch = epoch;
      best = {net.layers_, net.restriction_, net.output_bias_};
    }
    if (significant) {
      stall = 0;
    } else {
      ++stall;
    }

    if (stall >= cfg.patience) {
      if (net.config_.adaptive && net.depth() < net.config_.depth) {
        // Validation stalled: grow the network with a neutral layer. The
        // forward map is unchanged at insertion, so the best snapshot stays
        // valid; the Adam state for the new tensors starts fresh.
        net.append_layer(static_cast<std::uint64_t>(net.depth()));
        // Re-shape Adam's tensor list: insert fresh moments for the new layer
        // before the restriction/bias tensors by rebuilding the state.
        AdamState grown;
        const std::vector<int> sizes = tensor_sizes(net);
        std::size_t tail = net.has_restriction() ? 2 : 1;
        std::size_t old_layer_tensors = adam.tensors.size() - tail;
        for (std::size_t t = 0; t < old_layer_tensors; ++t)
          grown.tensors.push_back(std::move(adam.tensors[t]));
        for (int s = 0; s < 3; ++s) {
          AdamTensor at;
          const int sz = sizes[old_layer_tensors + static_cast<std::size_t>(s)];
          at.m = Eigen::VectorXd::Zero(sz);
          at.v = Eigen::VectorXd::Zero(sz);
          grown.tensors.push_back(std::move(at));
        }
        for (std::size_t t = old_layer_tensors; t < old_layer_tensors + tail; ++t)
          grown.tensors.push_back(std::move(adam.tensors[t]));
        adam = std::move(grown);
        // Grow the best snapshot with the same neutral layer so shapes match.
        best.layers.push_back(net.layers_.back());
        ++appended;
        stall = 0;
      } else {
        ++epoch;
        break;
      }
    }
  }

  // Restore the best-validation weights.
  net.layers_ = best.layers;
  net.restriction_ = best.restriction;
  net.output_bias_ = best.output_bias;

  report.summary.trained = true;
  report.summary.best_val = best_val;
  report.summary.best_epoch = best_epoch;
  report.summary.epochs_run = epoch;
  report.summary.layers_appended = appended;
  net.summary_ = report.summary;
  return report;
}

Eigen::MatrixXd normalize_input_basis(const Eigen::MatrixXd& input_basis,
                                      const Eigen::MatrixXd& inputs) {
  if (inputs.cols() < 2) throw ConfigError("basis normalization needs >= 2 samples");
  Eigen::MatrixXd scaled = input_basis;
  const Eigen::MatrixXd coords = input_basis.transpose() * inputs;
  for (Eigen::Index k = 0; k < scaled.cols(); ++k) {
    const double mean = coords.row(k).mean();
    const double var = (coords.row(k).array() - mean).square().mean();
    const double sd = std::sqrt(var);
    if (sd > 1e-300) scaled.col(k) /= sd;
  }
  return scaled;
}

// ---------------------------------------------------------------------------
// Diagnostics

double gradient_check(const ProjectedResNet& net, const Eigen::VectorXd& m,
                      const Eigen::VectorXd& target, const Eigen::VectorXd& direction) {
  if (direction.size() != net.trainable_count()) {
    throw ConfigError("gradient check direction length mismatch");
  }
  if (std::abs(direction.norm() - 1.0) > 1e-8) {
    throw ConfigError("gradient check direction must be unit norm");
  }
  Eigen::VectorXd grad(net.trainable_count());
  net.loss_and_gradient(m, target, 1.0, grad);
  const double analytic = grad.dot(direction);

  constexpr double h = 1e-6;
  ProjectedResNet probe = net;
  const Eigen::VectorXd theta = net.trainable_params();
  probe.set_trainable_params(theta + h * direction);
  const double plus = probe.loss_only(m, target, 1.0);
  probe.set_trainable_params(theta - h * direction);
  const double minus = probe.loss_only(m, target, 1.0);
  const double fd = (plus - minus) / (2.0 * h);

  const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-12});
  return std::abs(analytic - fd) / denom;
}

double gradient_check(const ProjectedResNet& net, const Eigen::VectorXd& m,
                      const Eigen::VectorXd& direction) {
  return gradient_check(net, m, Eigen::VectorXd::Zero(net.output_dim()), direction);
}

double l2_accuracy_percent(const ProjectedResNet& net, const Eigen::MatrixXd& test_inputs,
                           const Eigen::MatrixXd& true_outputs) {
  if (test_inputs.cols() == 0) throw ConfigError("l2 accuracy needs a nonempty test set");
  Eigen::MatrixXd approx;
  net.forward_block(test_inputs, approx);
  const double ref = true_outputs.norm();
  if (ref == 0.0) throw NumericalError("l2 accuracy undefined: reference norm is zero");
  return 100.0 * (1.0 - (approx - true_outputs).norm() / ref);
}

double l2_accuracy_percent(const ProjectedResNet& net, const ObservableMap& map,
                           const Eigen::MatrixXd& test_inputs) {
  Eigen::MatrixXd truth;
  map.evaluate_block(test_inputs, truth);
  return l2_accuracy_percent(net, test_inputs, truth);
}

// ---------------------------------------------------------------------------
// Persistence

void ProjectedResNet::save(const std::string& base_path) const {
  Container c;
  c.add_meta("kind", std::string("projected_resnet"));
  c.add_meta("n", static_cast<std::int64_t>(input_dim()));
  c.add_meta("d", static_cast<std::int64_t>(output_dim()));
  c.add_meta("r", static_cast<std::int64_t>(config_.breadth));
  c.add_meta("r_f", static_cast<std::int64_t>(output_basis_.cols()));
  c.add_meta("depth", static_cast<std::int64_t>(depth()));
  c.add_meta("max_depth", static_cast<std::int64_t>(config_.depth));
  c.add_meta("layer_rank", static_cast<std::int64_t>(config_.layer_rank));
  c.add_meta("activation", config_.activation);
  c.add_meta("adaptive", config_.adaptive);
  c.add_meta("seed", seed_);
  c.add_meta("trained", summary_.trained);
  c.add_meta("training_best_val", summary_.trained ? summary_.best_val : 0.0);
  c.add_meta("training_best_epoch", static_cast<std::int64_t>(summary_.best_epoch));
  c.add_meta("training_epochs_run", static_cast<std::int64_t>(summary_.epochs_run));
  c.add_meta("training_layers_appended",
             static_cast<std::int64_t>(summary_.layers_appended));

  c.add_block("input_basis", input_basis_);
  c.add_block("output_basis", output_basis_);
  if (has_restriction()) c.add_block("restriction", restriction_);
  for (int i = 0; i < depth(); ++i) {
    const std::string prefix = "layer" + std::to_string(i) + "_";
    c.add_block(prefix + "w1", layers_[static_cast<std::size_t>(i)].w1);
    c.add_block(prefix + "w2", layers_[static_cast<std::size_t>(i)].w2);
    c.add_block(prefix + "b", layers_[static_cast<std::size_t>(i)].b);
  }
  c.add_block("output_bias", output_bias_);
  save_container(base_path, c);
}

ProjectedResNet ProjectedResNet::load(const std::string& base_path) {
  const Container c = load_container(base_path);
  ResNetConfig cfg;
  cfg.breadth = static_cast<int>(c.meta_int("r"));
  cfg.depth = static_cast<int>(c.meta_int("max_depth"));
  cfg.layer_rank = static_cast<int>(c.meta_int("layer_rank"));
  cfg.activation = c.meta_string("activation");
  cfg.adaptive = c.meta_bool("adaptive");

  const int n = static_cast<int>(c.meta_int("n"));
  const int d = static_cast<int>(c.meta_int("d"));
  const int r_f = static_cast<int>(c.meta_int("r_f"));
  const int depth = static_cast<int>(c.meta_int("depth"));

  const Eigen::MatrixXd& v = c.block("input_basis");
  const Eigen::MatrixXd& phi = c.block("output_basis");
  if (v.rows() != n || v.cols() != cfg.breadth || phi.rows() != d || phi.cols() != r_f) {
    throw IoError("header/payload shape conflict in network bases: " + base_path);
  }

  ResNetConfig build_cfg = cfg;
  build_cfg.adaptive = false;
  build_cfg.depth = depth;
  ProjectedResNet net(build_cfg, v, phi, c.meta_uint("seed"));
  net.config_ = cfg;

  if (net.has_restriction()) {
    const Eigen::MatrixXd& s = c.block("restriction");
    if (s.rows() != r_f || s.cols() != cfg.breadth) {
      throw IoError("header/payload shape conflict in restriction block: " + base_path);
    }
    net.restriction_ = s;
  }
  for (int i = 0; i < depth; ++i) {
    const std::string prefix = "layer" + std::to_string(i) + "_";
    const Eigen::MatrixXd& w1 = c.block(prefix + "w1");
    const Eigen::MatrixXd& w2 = c.block(prefix + "w2");
    const Eigen::MatrixXd& b = c.block(prefix + "b");
    if (w1.rows() != cfg.layer_rank || w1.cols() != cfg.breadth ||
        w2.rows() != cfg.breadth || w2.cols() != cfg.layer_rank ||
        b.size() != cfg.layer_rank) {
      throw IoError("header/payload shape conflict in layer " + std::to_string(i) +
                    ": " + base_path);
    }
    auto& layer = net.layers_[static_cast<std::size_t>(i)];
    layer.w1 = w1;
    layer.w2 = w2;
    layer.b = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
  }
  const Eigen::MatrixXd& bias = c.block("output_bias");
  if (bias.size() != d) {
    throw IoError("header/payload shape conflict in output bias: " + base_path);
  }
  net.output_bias_ = Eigen::Map<const Eigen::VectorXd>(bias.data(), bias.size());

  net.summary_.trained = c.meta_bool("trained");
  net.summary_.best_val = c.meta_double("training_best_val");
  net.summary_.best_epoch = static_cast<int>(c.meta_int("training_best_epoch"));
  net.summary_.epochs_run = static_cast<int>(c.meta_int("training_epochs_run"));
  net.summary_.layers_appended =
      static_cast<int>(c.meta_int("training_layers_appended"));
  return net;
}

}  // namespace oedkit
