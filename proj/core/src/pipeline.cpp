#include "oedkit/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "oedkit/container.hpp"
#include "oedkit/design.hpp"
#include "oedkit/error_sweep.hpp"
#include "oedkit/errors.hpp"
#include "oedkit/json_writer.hpp"
#include "oedkit/projected_resnet.hpp"
#include "oedkit/reduction.hpp"

namespace oedkit {

namespace {

namespace fs = std::filesystem;

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_output_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.output_dir);
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    std::vector<std::string> files, std::uint64_t forward_solves,
                    std::uint64_t adjoint_solves) {
  files.push_back("manifest.json");
  std::sort(files.begin(), files.end());
  JsonWriter w;
  w.begin_object();
  w.kv("command", command);
  w.kv("seed", cfg.seed);
  w.key("files").begin_array();
  for (const auto& f : files) w.value(f);
  w.end_array();
  w.key("pde_solves").begin_object();
  w.kv("forward", forward_solves);
  w.kv("adjoint", adjoint_solves);
  w.end_object();
  w.end_object();
  write_text_file(join_path(cfg.output_dir, "manifest.json"), w.str() + "\n");
}

Eigen::MatrixXd matrix_from_nested(const std::vector<std::vector<double>>& rows,
                                   const std::string& field) {
  if (rows.empty()) throw ConfigError(field + ": must be nonempty");
  const std::size_t cols = rows.front().size();
  Eigen::MatrixXd m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw ConfigError(field + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

Eigen::VectorXd broadcast_sigma(const std::vector<double>& sigma, int d) {
  if (sigma.size() == 1) return Eigen::VectorXd::Constant(d, sigma[0]);
  if (static_cast<int>(sigma.size()) != d) {
    throw ConfigError("noise.sigma: length " + std::to_string(sigma.size()) +
                      " does not match candidate count " + std::to_string(d));
  }
  return Eigen::Map<const Eigen::VectorXd>(sigma.data(), d);
}

SensorLayout layout_from_config(const Grid& grid, const RunConfig::SensorSpec& spec) {
  if (spec.from_grid) {
    return SensorLayout::from_grid_spec(grid, spec.x0, spec.y0, spec.dx, spec.dy,
                                        spec.count_x, spec.count_y);
  }
  return SensorLayout::from_coords(grid, spec.coords);
}

}  // namespace

BuiltProblem build_problem(const RunConfig& cfg) {
  BuiltProblem p;
  p.grid = Grid(cfg.grid.nx, cfg.grid.ny, cfg.grid.lx, cfg.grid.ly);

  if (cfg.model.kind == "linear") {
    Eigen::MatrixXd g;
    if (!cfg.model.g.empty()) {
      g = matrix_from_nested(cfg.model.g, "model.g");
    } else {
      g = Eigen::MatrixXd::Zero(cfg.model.g_diag.size(), cfg.model.g_diag.size());
      for (std::size_t i = 0; i < cfg.model.g_diag.size(); ++i)
        g(static_cast<int>(i), static_cast<int>(i)) = cfg.model.g_diag[i];
    }
    Eigen::VectorXd offset = Eigen::VectorXd::Zero(g.rows());
    if (!cfg.model.offset.empty()) {
      if (static_cast<Eigen::Index>(cfg.model.offset.size()) != g.rows()) {
        throw ConfigError("model.offset: length does not match rows of g");
      }
      offset = Eigen::Map<const Eigen::VectorXd>(cfg.model.offset.data(),
                                                 cfg.model.offset.size());
    }
    p.map = std::make_unique<LinearMap>(g, offset);
  } else {
    const SensorLayout layout = layout_from_config(p.grid, cfg.model.sensors);
    if (cfg.model.kind == "elliptic") {
      p.map = std::make_unique<EllipticModel>(p.grid, layout);
    } else {
      p.map = std::make_unique<AdrModel>(p.grid, layout, cfg.model.k, cfg.model.v0);
    }
  }

  const int n = p.map->input_dim();
  if (cfg.prior.kind == "field") {
    if (n != p.grid.n()) {
      throw ConfigError("model input dimension " + std::to_string(n) +
                        " does not match grid node count " + std::to_string(p.grid.n()));
    }
    p.prior = std::make_unique<GaussianFieldPrior>(
        p.grid, cfg.prior.gamma, cfg.prior.delta,
        Eigen::VectorXd::Constant(n, cfg.prior.mean));
  } else {
    if (cfg.model.kind != "linear") {
      throw ConfigError("prior.kind: dense priors are only supported with linear models");
    }
    Eigen::MatrixXd cov = matrix_from_nested(cfg.prior.cov, "prior.cov");
    if (cov.rows() != n) {
      throw ConfigError("prior.cov: dimension does not match model input dimension");
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    if (!cfg.prior.mean_vector.empty()) {
      if (static_cast<int>(cfg.prior.mean_vector.size()) != n) {
        throw ConfigError("prior.mean_vector: length mismatch");
      }
      mean = Eigen::Map<const Eigen::VectorXd>(cfg.prior.mean_vector.data(), n);
    }
    p.prior = std::make_unique<DenseGaussian>(mean, cov);
  }

  p.noise = std::make_unique<NoiseModel>(
      broadcast_sigma(cfg.noise.sigma, p.map->output_dim()));
  return p;
}

namespace {

// ---------------------------------------------------------------------------
// Subcommand implementations

void cmd_sample_prior(const RunConfig& cfg) {
  if (cfg.prior.kind != "field") {
    throw ConfigError("sample-prior requires the grid field prior");
  }
  const Grid grid(cfg.grid.nx, cfg.grid.ny, cfg.grid.lx, cfg.grid.ly);
  GaussianFieldPrior prior(grid, cfg.prior.gamma, cfg.prior.delta,
                           Eigen::VectorXd::Constant(grid.n(), cfg.prior.mean));
  prior.save(join_path(cfg.output_dir, "prior"));

  Eigen::MatrixXd samples(prior.dim(), cfg.sample_count);
  RngStream rng(cfg.seed, streams::kPriorSample);
  prior.sample_block(rng, samples);

  Container c;
  c.add_meta("kind", std::string("prior_samples"));
  c.add_meta("count", static_cast<std::int64_t>(cfg.sample_count));
  c.add_meta("seed", cfg.seed);
  c.add_block("samples", Eigen::MatrixXd(samples.transpose()));
  save_container(join_path(cfg.output_dir, "samples"), c);

  write_manifest(cfg, "sample-prior",
                 {"prior.json", "prior.bin", "samples.json", "samples.bin"}, 0, 0);
  std::printf("sample-prior: wrote %d samples of dimension %d to %s\n", cfg.sample_count,
              prior.dim(), cfg.output_dir.c_str());
}

void cmd_gen_data(const RunConfig& cfg) {
  BuiltProblem p = build_problem(cfg);
  const Dataset data =
      generate_dataset(*p.map, *p.prior, cfg.data.n_samples, cfg.data.n_test,
                       cfg.training.split, cfg.seed, cfg.threads);
  data.save(join_path(cfg.output_dir, "dataset"));
  const std::uint64_t solves = p.map->forward_solve_count();
  write_manifest(cfg, "gen-data", {"dataset.json", "dataset.bin"}, solves,
                 p.map->adjoint_solve_count());
  std::printf("gen-data: %d samples (%zu train / %zu val / %zu test), %llu PDE solves\n",
              data.size(), data.train_idx.size(), data.val_idx.size(),
              data.test_idx.size(), static_cast<unsigned long long>(solves));
}

void cmd_build_bases(const RunConfig& cfg) {
  BuiltProblem p = build_problem(cfg);
  const int n = p.map->input_dim();
  const int d = p.map->output_dim();

  const Eigen::MatrixXd h =
      estimate_as_operator(*p.map, *p.prior, cfg.reduction.n_samples_as, cfg.seed,
                           cfg.threads);

  int r_m = std::min(cfg.reduction.r_m, n);
  int r_f = std::min(cfg.reduction.r_f, d);
  ReducedBases bases;
  if (cfg.reduction.energy.has_value()) {
    // Full spectra first, then truncate by the energy rule.
    auto [v_full, lam_full] = as_basis(h, *p.prior, n);
    auto [phi_full, pod_full] = pod_basis(*p.map, *p.prior, cfg.reduction.n_samples_pod,
                                          d, cfg.seed, cfg.threads);
    r_m = energy_rank(lam_full, *cfg.reduction.energy);
    r_f = energy_rank(pod_full, *cfg.reduction.energy);
    bases.input_basis = v_full.leftCols(r_m);
    bases.input_eigs = lam_full.head(r_m);
    bases.output_basis = phi_full.leftCols(r_f);
    bases.output_eigs = pod_full.head(r_f);
  } else {
    auto [v, lam] = as_basis(h, *p.prior, r_m);
    auto [phi, pod] = pod_basis(*p.map, *p.prior, cfg.reduction.n_samples_pod, r_f,
                                cfg.seed, cfg.threads);
    bases.input_basis = v;
    bases.input_eigs = lam;
    bases.output_basis = phi;
    bases.output_eigs = pod;
  }
  bases.n_samples_as = cfg.reduction.n_samples_as;
  bases.n_samples_pod = cfg.reduction.n_samples_pod;
  bases.seed = cfg.seed;
  bases.save(join_path(cfg.output_dir, "bases"));

  write_manifest(cfg, "build-bases", {"bases.json", "bases.bin"},
                 p.map->forward_solve_count(), p.map->adjoint_solve_count());
  std::printf(
      "build-bases: r_m=%d r_f=%d, lambda_as[0]=%.6g lambda_pod[0]=%.6g, "
      "%llu forward / %llu adjoint solves\n",
      r_m, r_f, bases.input_eigs.size() ? bases.input_eigs[0] : 0.0,
      bases.output_eigs.size() ? bases.output_eigs[0] : 0.0,
      static_cast<unsigned long long>(p.map->forward_solve_count()),
      static_cast<unsigned long long>(p.map->adjoint_solve_count()));
}

void cmd_train(const RunConfig& cfg) {
  const Dataset data = Dataset::load(join_path(cfg.output_dir, "dataset"));
  const ReducedBases bases = ReducedBases::load(join_path(cfg.output_dir, "bases"));

  const int r = cfg.network.breadth;
  if (bases.input_basis.cols() < r) {
    throw ConfigError("network.breadth exceeds the stored input basis rank");
  }
  const int r_f = std::min<int>(static_cast<int>(bases.output_basis.cols()), r);

  ResNetConfig net_cfg;
  net_cfg.breadth = r;
  net_cfg.depth = cfg.network.depth;
  net_cfg.layer_rank = cfg.network.layer_rank;
  net_cfg.activation = cfg.network.activation;
  net_cfg.adaptive = cfg.network.adaptive;
  const Eigen::MatrixXd encoder = normalize_input_basis(
      bases.input_basis.leftCols(r), data.gather_inputs(data.train_idx));
  ProjectedResNet net(net_cfg, encoder, bases.output_basis.leftCols(r_f), cfg.seed);

  TrainConfig tc;
  tc.epochs = cfg.training.epochs;
  tc.batch = cfg.training.batch;
  tc.learning_rate = cfg.training.lr;
  tc.patience = cfg.training.patience;
  tc.seed = cfg.seed;
  const TrainReport report = train(net, data, tc);
  net.save(join_path(cfg.output_dir, "net"));

  double test_accuracy = 0.0;
  if (!data.test_idx.empty()) {
    test_accuracy = l2_accuracy_percent(net, data.gather_inputs(data.test_idx),
                                        data.gather_outputs(data.test_idx));
  }

  JsonWriter w;
  w.begin_object();
  w.kv("best_val", report.summary.best_val);
  w.kv("best_epoch", report.summary.best_epoch);
  w.kv("epochs_run", report.summary.epochs_run);
  w.kv("layers_appended", report.summary.layers_appended);
  w.kv("final_depth", net.depth());
  w.kv("test_l2_accuracy_percent", test_accuracy);
  w.key("train_loss").begin_array();
  for (double x : report.train_loss) w.value(x);
  w.end_array();
  w.key("val_loss").begin_array();
  for (double x : report.val_loss) w.value(x);
  w.end_array();
  w.end_object();
  write_text_file(join_path(cfg.output_dir, "train_report.json"), w.str() + "\n");

  write_manifest(cfg, "train", {"net.json", "net.bin", "train_report.json"}, 0, 0);
  std::printf("train: best_val=%.6g at epoch %d, depth=%d, test l2 accuracy=%.2f%%\n",
              report.summary.best_val, report.summary.best_epoch, net.depth(),
              test_accuracy);
}

struct EvaluatorBundle {
  std::unique_ptr<ProjectedResNet> net;
  std::unique_ptr<ObservableEvaluator> evaluator;
  std::string kind;
};

EvaluatorBundle make_evaluator(const RunConfig& cfg, const BuiltProblem& p) {
  EvaluatorBundle b;
  b.kind = cfg.eig.evaluator;
  if (cfg.eig.evaluator == "surrogate") {
    b.net = std::make_unique<ProjectedResNet>(
        ProjectedResNet::load(join_path(cfg.output_dir, "net")));
    if (b.net->input_dim() != p.map->input_dim() ||
        b.net->output_dim() != p.map->output_dim()) {
      throw ConfigError("stored network dimensions do not match the configured model");
    }
    b.evaluator = std::make_unique<SurrogateEvaluator>(*b.net);
  } else {
    b.evaluator = std::make_unique<MapEvaluator>(*p.map);
  }
  return b;
}

void write_eig_artifact(const RunConfig& cfg, const EigEstimate& est,
                        const std::string& evaluator_kind) {
  JsonWriter w;
  w.begin_object();
  w.kv("value", est.value);
  w.kv("stderr", est.std_error);
  w.kv("n_out", est.n_out);
  w.kv("n_in", est.n_in);
  w.key("design_indices").begin_array();
  for (int i : est.design_indices) w.value(i);
  w.end_array();
  w.kv("seed", cfg.seed);
  w.kv("evaluator_kind", evaluator_kind);
  w.end_object();
  write_text_file(join_path(cfg.output_dir, "eig.json"), w.str() + "\n");

  std::string csv = "outer_index,term,log_norm\n";
  for (int i = 0; i < est.per_outer_terms.size(); ++i) {
    csv += std::to_string(i) + "," + JsonWriter::format_double(est.per_outer_terms[i]) +
           "," + JsonWriter::format_double(est.per_outer_log_norm[i]) + "\n";
  }
  write_text_file(join_path(cfg.output_dir, "eig_terms.csv"), csv);
}

void cmd_estimate_eig(const RunConfig& cfg) {
  BuiltProblem p = build_problem(cfg);
  const EvaluatorBundle bundle = make_evaluator(cfg, p);
  const Design design(p.map->output_dim(), {cfg.eig.design.begin(), cfg.eig.design.end()});

  DlmcOptions opt;
  opt.n_out = cfg.eig.n_out;
  opt.n_in = cfg.eig.n_in;
  opt.seed = cfg.seed;
  opt.inner_mode =
      cfg.eig.inner_mode == "fresh" ? InnerMode::kFresh : InnerMode::kSharedBank;
  opt.n_threads = cfg.threads;

  p.map->reset_solve_counters();
  const EigEstimate est = eig_dlmc(*bundle.evaluator, design, *p.prior, *p.noise, opt);
  write_eig_artifact(cfg, est, bundle.kind);
  write_manifest(cfg, "estimate-eig", {"eig.json", "eig_terms.csv"},
                 p.map->forward_solve_count(), p.map->adjoint_solve_count());
  std::printf("estimate-eig: value=%.6g stderr=%.3g n_out=%d n_in=%d evaluator=%s "
              "pde_solves=%llu\n",
              est.value, est.std_error, est.n_out, est.n_in, bundle.kind.c_str(),
              static_cast<unsigned long long>(p.map->forward_solve_count()));
}

void cmd_greedy(const RunConfig& cfg) {
  BuiltProblem p = build_problem(cfg);
  const EvaluatorBundle bundle = make_evaluator(cfg, p);
  const int d = p.map->output_dim();
  if (cfg.greedy.r > d) throw ConfigError("greedy.r exceeds the candidate count");

  // One frozen outer bank for the whole run: every candidate at every step is
  // compared on the same realizations.
  const OuterSampleBank bank = simulate_outer_samples(
      *p.prior, *bundle.evaluator, *p.noise, cfg.eig.n_out, cfg.seed, cfg.threads);

  DlmcOptions opt;
  opt.n_out = cfg.eig.n_out;
  opt.n_in = cfg.eig.n_in;
  opt.seed = cfg.seed;
  opt.inner_mode =
      cfg.eig.inner_mode == "fresh" ? InnerMode::kFresh : InnerMode::kSharedBank;
  opt.n_threads = 1;  // parallelism goes over candidates below
  opt.outer_bank = &bank;

  InnerSampleBank inner;
  if (opt.inner_mode == InnerMode::kSharedBank) {
    inner = build_inner_bank(*p.prior, *bundle.evaluator, cfg.eig.n_in, cfg.seed,
                             cfg.threads);
    opt.inner_bank = &inner;
  }

  const GreedyResult result = greedy_select(
      [&](const Design& design) {
        return eig_dlmc(*bundle.evaluator, design, *p.prior, *p.noise, opt).value;
      },
      d, cfg.greedy.r, cfg.threads);

  JsonWriter w;
  w.begin_object();
  w.kv("d", d);
  w.kv("r", cfg.greedy.r);
  w.key("indices").begin_array();
  for (int i : result.design.indices) w.value(i);
  w.end_array();
  w.key("per_step_eig").begin_array();
  for (double x : result.step_values) w.value(x);
  w.end_array();
  w.kv("eig_eval_kind", bundle.kind);
  w.kv("seed", cfg.seed);
  w.end_object();
  write_text_file(join_path(cfg.output_dir, "greedy.json"), w.str() + "\n");

  write_manifest(cfg, "greedy", {"greedy.json"}, p.map->forward_solve_count(),
                 p.map->adjoint_solve_count());
  std::string idx;
  for (int i : result.design.indices) idx += (idx.empty() ? "" : ",") + std::to_string(i);
  std::printf("greedy: selected [%s], final EIG=%.6g, evaluator=%s\n", idx.c_str(),
              result.step_values.empty() ? 0.0 : result.step_values.back(),
              bundle.kind.c_str());
}

void cmd_verify(const RunConfig& cfg) {
  BuiltProblem p = build_problem(cfg);
  const int d = p.map->output_dim();
  if (cfg.greedy.r > d) throw ConfigError("greedy.r exceeds the candidate count");

  // Shared training data and bases at the largest requested breadth.
  const Dataset data =
      generate_dataset(*p.map, *p.prior, cfg.data.n_samples, cfg.data.n_test,
                       cfg.training.split, cfg.seed, cfg.threads);
  const int max_breadth =
      *std::max_element(cfg.verify.breadths.begin(), cfg.verify.breadths.end());
  const Eigen::MatrixXd h = estimate_as_operator(*p.map, *p.prior,
                                                 cfg.reduction.n_samples_as, cfg.seed,
                                                 cfg.threads);
  auto [v, lam] = as_basis(h, *p.prior, std::min(max_breadth, p.map->input_dim()));
  auto [phi, pod] = pod_basis(*p.map, *p.prior, cfg.reduction.n_samples_pod,
                              std::min(max_breadth, d), cfg.seed, cfg.threads);

  std::vector<std::unique_ptr<ProjectedResNet>> nets;
  std::vector<SweepSurrogate> surrogates;
  for (int breadth : cfg.verify.breadths) {
    if (breadth > v.cols() || breadth < 2) {
      throw ConfigError("verify.breadths entry out of range for this model");
    }
    ResNetConfig nc;
    nc.breadth = breadth;
    nc.depth = cfg.network.depth;
    nc.layer_rank = std::min(cfg.network.layer_rank, breadth - 1);
    nc.activation = cfg.network.activation;
    nc.adaptive = cfg.network.adaptive;
    const Eigen::MatrixXd encoder = normalize_input_basis(
        v.leftCols(breadth), data.gather_inputs(data.train_idx));
    auto net = std::make_unique<ProjectedResNet>(
        nc, encoder, phi.leftCols(std::min<int>(breadth, phi.cols())), cfg.seed);
    TrainConfig tc;
    tc.epochs = cfg.training.epochs;
    tc.batch = cfg.training.batch;
    tc.learning_rate = cfg.training.lr;
    tc.patience = cfg.training.patience;
    tc.seed = cfg.seed;
    train(*net, data, tc);
    nets.push_back(std::move(net));
  }
  std::vector<SurrogateEvaluator> evals;
  evals.reserve(nets.size());
  for (auto& net : nets) evals.emplace_back(*net);
  for (std::size_t i = 0; i < nets.size(); ++i) {
    surrogates.push_back({&evals[i], "breadth_" + std::to_string(cfg.verify.breadths[i]),
                          cfg.verify.breadths[i]});
  }

  std::vector<Design> designs;
  for (int k = 0; k < cfg.verify.n_designs; ++k) {
    RngStream rng(cfg.seed, streams::kDesign, static_cast<std::uint64_t>(k));
    designs.push_back(random_design(rng, d, cfg.greedy.r));
  }

  const ErrorSweepReport report =
      bound_sweep(surrogates, *p.map, *p.prior, *p.noise, designs, cfg.eig.n_out,
                  cfg.eig.n_in, cfg.seed, cfg.threads, cfg.verify.n_test);

  JsonWriter w;
  w.begin_object();
  w.kv("slope", report.slope);
  w.kv("c_hat", report.c_hat);
  w.kv("c_hat_lognorm", report.c_hat_lognorm);
  w.kv("spans_decade", report.spans_decade);
  w.kv("n_out", report.n_out);
  w.kv("n_in", report.n_in);
  w.kv("n_designs", report.n_designs);
  w.key("surrogates").begin_array();
  for (const auto& rec : report.records) {
    w.begin_object();
    w.kv("id", rec.id);
    w.kv("breadth", rec.breadth);
    w.kv("epsilon_hat", rec.epsilon_hat);
    w.kv("l2_accuracy_percent", rec.l2_accuracy);
    w.kv("mean_lognorm_error", rec.mean_lognorm_error);
    w.kv("max_lognorm_error", rec.max_lognorm_error);
    w.kv("mean_eig_error", rec.mean_eig_error);
    w.kv("max_eig_error", rec.max_eig_error);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  write_text_file(join_path(cfg.output_dir, "verify_report.json"), w.str() + "\n");

  std::string csv =
      "surrogate,breadth,epsilon_hat,l2_accuracy_percent,mean_lognorm_error,"
      "max_lognorm_error,mean_eig_error,max_eig_error\n";
  for (const auto& rec : report.records) {
    csv += rec.id + "," + std::to_string(rec.breadth) + "," +
           JsonWriter::format_double(rec.epsilon_hat) + "," +
           JsonWriter::format_double(rec.l2_accuracy) + "," +
           JsonWriter::format_double(rec.mean_lognorm_error) + "," +
           JsonWriter::format_double(rec.max_lognorm_error) + "," +
           JsonWriter::format_double(rec.mean_eig_error) + "," +
           JsonWriter::format_double(rec.max_eig_error) + "\n";
  }
  write_text_file(join_path(cfg.output_dir, "verify_report.csv"), csv);

  write_manifest(cfg, "verify", {"verify_report.json", "verify_report.csv"},
                 p.map->forward_solve_count(), p.map->adjoint_solve_count());
  std::printf("verify: slope=%.3f c_hat=%.3g c_hat_lognorm=%.3g over %d surrogates, "
              "%d designs\n",
              report.slope, report.c_hat, report.c_hat_lognorm,
              static_cast<int>(report.records.size()), report.n_designs);
}

void cmd_oracle(const RunConfig& cfg) {
  if (cfg.model.kind != "linear") {
    throw ConfigError("oracle requires model.kind = 'linear'");
  }
  BuiltProblem p = build_problem(cfg);
  const auto* linear = dynamic_cast<const LinearMap*>(p.map.get());
  const Eigen::MatrixXd cov = p.prior->dense_covariance();
  const int d = p.map->output_dim();

  double design_eig = 0.0;
  const bool has_design = !cfg.eig.design.empty();
  if (has_design) {
    const Design design(d, {cfg.eig.design.begin(), cfg.eig.design.end()});
    design_eig = eig_closed_form_linear_gaussian(linear->g(), cov, *p.noise, design);
  }

  const auto [best, best_value] = exhaustive_select(
      [&](const Design& design) {
        return eig_closed_form_linear_gaussian(linear->g(), cov, *p.noise, design);
      },
      d, std::min(cfg.greedy.r, d));

  JsonWriter w;
  w.begin_object();
  if (has_design) {
    w.key("design").begin_array();
    for (int i : cfg.eig.design) w.value(i);
    w.end_array();
    w.kv("design_eig", design_eig);
  }
  w.key("exhaustive_indices").begin_array();
  for (int i : best.indices) w.value(i);
  w.end_array();
  w.kv("exhaustive_eig", best_value);
  w.kv("r", std::min(cfg.greedy.r, d));
  w.kv("seed", cfg.seed);
  w.end_object();
  write_text_file(join_path(cfg.output_dir, "oracle.json"), w.str() + "\n");

  write_manifest(cfg, "oracle", {"oracle.json"}, 0, 0);
  std::string idx;
  for (int i : best.indices) idx += (idx.empty() ? "" : ",") + std::to_string(i);
  std::printf("oracle: exhaustive optimum [%s] with EIG=%.6g%s\n", idx.c_str(), best_value,
              has_design ? (", configured design EIG=" +
                            std::to_string(design_eig)).c_str()
                         : "");
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = {
      "sample-prior", "gen-data", "build-bases", "train",
      "estimate-eig", "greedy",   "verify",      "oracle"};
  return names;
}

void run_subcommand(const std::string& name, const RunConfig& cfg) {
  ensure_output_dir(cfg);
  if (name == "sample-prior") {
    cmd_sample_prior(cfg);
  } else if (name == "gen-data") {
    cmd_gen_data(cfg);
  } else if (name == "build-bases") {
    cmd_build_bases(cfg);
  } else if (name == "train") {
    cmd_train(cfg);
  } else if (name == "estimate-eig") {
    cmd_estimate_eig(cfg);
  } else if (name == "greedy") {
    cmd_greedy(cfg);
  } else if (name == "verify") {
    cmd_verify(cfg);
  } else if (name == "oracle") {
    cmd_oracle(cfg);
  } else {
    throw ConfigError("unknown subcommand '" + name + "'");
  }
}

}  // namespace oedkit
