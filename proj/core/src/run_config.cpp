#include "oedkit/run_config.hpp"

#include <json.hpp>

#include "oedkit/errors.hpp"
#include "oedkit/json_writer.hpp"

namespace oedkit {

namespace {

using nlohmann::json;

// Sets a value at a dotted path, creating intermediate objects.
void set_dotted(json& root, const std::string& path, const json& value) {
  json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos
                                                   ? std::string::npos
                                                   : dot - start);
    if (key.empty()) throw ConfigError("override has empty path segment: " + path);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);  // plain string
  }
}

class Validator {
 public:
  void fail(const std::string& field, const std::string& why) {
    problems_.push_back(field + ": " + why);
  }

  template <typename T>
  T get(const json& j, const std::string& section, const std::string& field,
        const T& fallback) {
    if (!j.contains(field)) return fallback;
    try {
      return j.at(field).get<T>();
    } catch (const json::exception&) {
      fail(section.empty() ? field : section + "." + field, "wrong type");
      return fallback;
    }
  }

  void finish() const {
    if (problems_.empty()) return;
    std::string msg = "invalid configuration:";
    for (const auto& p : problems_) msg += "\n  - " + p;
    throw ConfigError(msg);
  }

  bool ok() const { return problems_.empty(); }

 private:
  std::vector<std::string> problems_;
};

}  // namespace

RunConfig parse_run_config(const std::string& json_text,
                           const std::vector<std::string>& overrides) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");

  for (const auto& ov : overrides) {
    const std::size_t eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override must look like section.field=value: " + ov);
    }
    set_dotted(root, ov.substr(0, eq), parse_override_value(ov.substr(eq + 1)));
  }

  Validator v;
  RunConfig cfg;

  const json grid = root.value("grid", json::object());
  cfg.grid.nx = v.get(grid, "grid", "nx", cfg.grid.nx);
  cfg.grid.ny = v.get(grid, "grid", "ny", cfg.grid.ny);
  cfg.grid.lx = v.get(grid, "grid", "lx", cfg.grid.lx);
  cfg.grid.ly = v.get(grid, "grid", "ly", cfg.grid.ly);
  if (cfg.grid.nx < 2) v.fail("grid.nx", "must be >= 2");
  if (cfg.grid.ny < 2) v.fail("grid.ny", "must be >= 2");
  if (!(cfg.grid.lx > 0.0)) v.fail("grid.lx", "must be positive");
  if (!(cfg.grid.ly > 0.0)) v.fail("grid.ly", "must be positive");

  const json prior = root.value("prior", json::object());
  cfg.prior.kind = v.get<std::string>(prior, "prior", "kind", cfg.prior.kind);
  cfg.prior.gamma = v.get(prior, "prior", "gamma", cfg.prior.gamma);
  cfg.prior.delta = v.get(prior, "prior", "delta", cfg.prior.delta);
  cfg.prior.mean = v.get(prior, "prior", "mean", cfg.prior.mean);
  cfg.prior.cov =
      v.get<std::vector<std::vector<double>>>(prior, "prior", "cov", {});
  cfg.prior.mean_vector =
      v.get<std::vector<double>>(prior, "prior", "mean_vector", {});
  if (cfg.prior.kind != "field" && cfg.prior.kind != "dense") {
    v.fail("prior.kind", "must be 'field' or 'dense'");
  }
  if (cfg.prior.kind == "field") {
    if (!(cfg.prior.delta > 0.0)) v.fail("prior.delta", "must be positive");
    if (cfg.prior.gamma < 0.0) v.fail("prior.gamma", "must be nonnegative");
  } else if (cfg.prior.cov.empty()) {
    v.fail("prior.cov", "dense prior needs a covariance matrix");
  }

  const json model = root.value("model", json::object());
  cfg.model.kind = v.get<std::string>(model, "model", "kind", cfg.model.kind);
  cfg.model.k = v.get(model, "model", "k", cfg.model.k);
  cfg.model.v0 = v.get(model, "model", "v0", cfg.model.v0);
  cfg.model.g = v.get<std::vector<std::vector<double>>>(model, "model", "g", {});
  cfg.model.g_diag = v.get<std::vector<double>>(model, "model", "g_diag", {});
  cfg.model.offset = v.get<std::vector<double>>(model, "model", "offset", {});
  if (cfg.model.kind != "linear" && cfg.model.kind != "elliptic" &&
      cfg.model.kind != "adr") {
    v.fail("model.kind", "must be 'linear', 'elliptic', or 'adr'");
  }
  if (cfg.model.kind == "adr" && !(cfg.model.k > 0.0)) {
    v.fail("model.k", "must be positive");
  }
  if (cfg.model.kind == "linear" && cfg.model.g.empty() && cfg.model.g_diag.empty()) {
    v.fail("model.g", "linear model needs 'g' (matrix) or 'g_diag' (diagonal)");
  }

  if (model.contains("sensors")) {
    const json sensors = model["sensors"];
    if (sensors.contains("coords")) {
      cfg.model.sensors.from_grid = false;
      const auto pts =
          v.get<std::vector<std::vector<double>>>(sensors, "model.sensors", "coords", {});
      for (const auto& p : pts) {
        if (p.size() != 2) {
          v.fail("model.sensors.coords", "each entry must be an [x, y] pair");
          break;
        }
        cfg.model.sensors.coords.push_back({p[0], p[1]});
      }
      if (cfg.model.sensors.coords.empty()) {
        v.fail("model.sensors.coords", "must be nonempty");
      }
    } else {
      cfg.model.sensors.x0 = v.get(sensors, "model.sensors", "x0", cfg.model.sensors.x0);
      cfg.model.sensors.y0 = v.get(sensors, "model.sensors", "y0", cfg.model.sensors.y0);
      cfg.model.sensors.dx = v.get(sensors, "model.sensors", "dx", cfg.model.sensors.dx);
      cfg.model.sensors.dy = v.get(sensors, "model.sensors", "dy", cfg.model.sensors.dy);
      cfg.model.sensors.count_x =
          v.get(sensors, "model.sensors", "count_x", cfg.model.sensors.count_x);
      cfg.model.sensors.count_y =
          v.get(sensors, "model.sensors", "count_y", cfg.model.sensors.count_y);
      if (cfg.model.sensors.count_x < 1) v.fail("model.sensors.count_x", "must be >= 1");
      if (cfg.model.sensors.count_y < 1) v.fail("model.sensors.count_y", "must be >= 1");
    }
  }

  const json noise = root.value("noise", json::object());
  if (noise.contains("sigma")) {
    cfg.noise.present = true;
    const json& s = noise["sigma"];
    if (s.is_number()) {
      cfg.noise.sigma = {s.get<double>()};
    } else {
      cfg.noise.sigma = v.get<std::vector<double>>(noise, "noise", "sigma", {});
    }
    for (double x : cfg.noise.sigma) {
      if (!(x > 0.0)) {
        v.fail("noise.sigma", "entries must be positive");
        break;
      }
    }
    if (cfg.noise.sigma.empty()) v.fail("noise.sigma", "must be nonempty");
  } else {
    v.fail("noise.sigma", "missing required field");
  }

  const json reduction = root.value("reduction", json::object());
  cfg.reduction.r_m = v.get(reduction, "reduction", "r_m", cfg.reduction.r_m);
  cfg.reduction.r_f = v.get(reduction, "reduction", "r_f", cfg.reduction.r_f);
  if (reduction.contains("energy") && !reduction["energy"].is_null()) {
    cfg.reduction.energy = v.get(reduction, "reduction", "energy", 0.99);
    if (!(*cfg.reduction.energy > 0.0) || *cfg.reduction.energy > 1.0) {
      v.fail("reduction.energy", "must lie in (0, 1]");
    }
  }
  cfg.reduction.n_samples_as =
      v.get(reduction, "reduction", "n_samples_as", cfg.reduction.n_samples_as);
  cfg.reduction.n_samples_pod =
      v.get(reduction, "reduction", "n_samples_pod", cfg.reduction.n_samples_pod);
  if (cfg.reduction.r_m < 1) v.fail("reduction.r_m", "must be >= 1");
  if (cfg.reduction.r_f < 1) v.fail("reduction.r_f", "must be >= 1");
  if (cfg.reduction.n_samples_as < 1) v.fail("reduction.n_samples_as", "must be >= 1");
  if (cfg.reduction.n_samples_pod < 1) v.fail("reduction.n_samples_pod", "must be >= 1");

  const json network = root.value("network", json::object());
  cfg.network.breadth = v.get(network, "network", "breadth", cfg.network.breadth);
  cfg.network.depth = v.get(network, "network", "depth", cfg.network.depth);
  cfg.network.layer_rank = v.get(network, "network", "layer_rank", cfg.network.layer_rank);
  cfg.network.activation =
      v.get<std::string>(network, "network", "activation", cfg.network.activation);
  cfg.network.adaptive = v.get(network, "network", "adaptive", cfg.network.adaptive);
  if (cfg.network.breadth < 1) v.fail("network.breadth", "must be >= 1");
  if (cfg.network.depth < 1) v.fail("network.depth", "must be >= 1");
  if (cfg.network.layer_rank < 1 || cfg.network.layer_rank >= cfg.network.breadth) {
    v.fail("network.layer_rank", "must satisfy 1 <= layer_rank < breadth");
  }
  if (cfg.network.activation != "tanh") {
    v.fail("network.activation", "only 'tanh' is supported");
  }

  const json training = root.value("training", json::object());
  cfg.training.epochs = v.get(training, "training", "epochs", cfg.training.epochs);
  cfg.training.batch = v.get(training, "training", "batch", cfg.training.batch);
  cfg.training.lr = v.get(training, "training", "lr", cfg.training.lr);
  cfg.training.patience = v.get(training, "training", "patience", cfg.training.patience);
  cfg.training.split = v.get(training, "training", "split", cfg.training.split);
  if (cfg.training.epochs < 1) v.fail("training.epochs", "must be >= 1");
  if (cfg.training.batch < 1) v.fail("training.batch", "must be >= 1");
  if (!(cfg.training.lr > 0.0)) v.fail("training.lr", "must be positive");
  if (cfg.training.patience < 1) v.fail("training.patience", "must be >= 1");
  if (!(cfg.training.split > 0.0) || cfg.training.split > 1.0) {
    v.fail("training.split", "must lie in (0, 1]");
  }

  const json eig = root.value("eig", json::object());
  cfg.eig.n_out = v.get(eig, "eig", "n_out", cfg.eig.n_out);
  cfg.eig.n_in = v.get(eig, "eig", "n_in", cfg.eig.n_in);
  cfg.eig.inner_mode = v.get<std::string>(eig, "eig", "inner_mode", cfg.eig.inner_mode);
  cfg.eig.evaluator = v.get<std::string>(eig, "eig", "evaluator", cfg.eig.evaluator);
  cfg.eig.design = v.get<std::vector<int>>(eig, "eig", "design", {});
  if (cfg.eig.n_out < 1) v.fail("eig.n_out", "must be >= 1");
  if (cfg.eig.n_in < 1) v.fail("eig.n_in", "must be >= 1");
  if (cfg.eig.inner_mode != "fresh" && cfg.eig.inner_mode != "shared-bank") {
    v.fail("eig.inner_mode", "must be 'fresh' or 'shared-bank'");
  }
  if (cfg.eig.evaluator != "true" && cfg.eig.evaluator != "surrogate") {
    v.fail("eig.evaluator", "must be 'true' or 'surrogate'");
  }

  const json greedy = root.value("greedy", json::object());
  cfg.greedy.r = v.get(greedy, "greedy", "r", cfg.greedy.r);
  if (cfg.greedy.r < 1) v.fail("greedy.r", "must be >= 1");

  const json data = root.value("data", json::object());
  cfg.data.n_samples = v.get(data, "data", "n_samples", cfg.data.n_samples);
  cfg.data.n_test = v.get(data, "data", "n_test", cfg.data.n_test);
  if (cfg.data.n_samples < 1) v.fail("data.n_samples", "must be >= 1");
  if (cfg.data.n_test < 0 || cfg.data.n_test >= cfg.data.n_samples) {
    v.fail("data.n_test", "must lie in [0, data.n_samples)");
  }

  const json verify = root.value("verify", json::object());
  cfg.verify.n_designs = v.get(verify, "verify", "n_designs", cfg.verify.n_designs);
  cfg.verify.n_test = v.get(verify, "verify", "n_test", cfg.verify.n_test);
  cfg.verify.breadths = v.get<std::vector<int>>(verify, "verify", "breadths",
                                                cfg.verify.breadths);
  if (cfg.verify.n_designs < 1) v.fail("verify.n_designs", "must be >= 1");
  if (cfg.verify.n_test < 1) v.fail("verify.n_test", "must be >= 1");
  if (cfg.verify.breadths.size() < 2) {
    v.fail("verify.breadths", "needs at least 2 entries");
  }

  const json samples = root.value("samples", json::object());
  cfg.sample_count = v.get(samples, "samples", "count", cfg.sample_count);
  if (cfg.sample_count < 1) v.fail("samples.count", "must be >= 1");

  cfg.seed = v.get<std::uint64_t>(root, "", "seed", cfg.seed);
  cfg.threads = v.get(root, "", "threads", cfg.threads);
  cfg.output_dir = v.get<std::string>(root, "", "output_dir", cfg.output_dir);
  if (cfg.threads < 1) v.fail("threads", "must be >= 1");
  if (cfg.output_dir.empty()) v.fail("output_dir", "must be nonempty");

  v.finish();
  return cfg;
}

RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides) {
  return parse_run_config(read_text_file(path), overrides);
}

}  // namespace oedkit
