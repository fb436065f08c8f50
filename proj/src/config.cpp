#include "flowadmm/config.hpp"

#include <algorithm>
#include <set>

#include "flowadmm/io.hpp"

namespace flowadmm {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "image.height", "image.width", "image.channels",
      "task.kind", "task.kernel_size", "task.sigma_blur", "task.stride", "task.half_size",
      "task.missing_prob", "task.mask_seed", "task.noise_sigma", "task.degradation_seed",
      "prior.kind", "prior.mean", "prior.mean_values", "prior.variance", "prior.weights",
      "prior.means", "prior.variances", "prior.component_sigma", "prior.mlp_path",
      "solver.kind", "solver.tau", "solver.iterations", "solver.t_min", "solver.t_max", "solver.gamma",
      "solver.samples.kind", "solver.samples.N", "solver.samples.N_e", "solver.samples.N_m",
      "solver.samples.N_l", "solver.samples.s1", "solver.samples.s2",
      "solver.estimator", "solver.snapshot_every",
      "corpus.seed", "corpus.templates", "corpus.jitter_sigma",
      "bench.images", "bench.methods", "bench.bootstrap_resamples", "bench.bootstrap_seed", "bench.pnp_tau",
      "io.manifest", "io.image_index",
      "probe.t_grid", "probe.points", "probe.power_iters", "probe.tol",
      "exec", "seed", "name",
  };
  return keys;
}

double as_double(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return j.get<double>();
}

std::size_t as_size(const json& j, const std::string& key) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    throw ConfigError("config key '" + key + "' must be a nonnegative integer");
  }
  return j.get<std::size_t>();
}

std::uint64_t as_u64(const json& j, const std::string& key) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    throw ConfigError("config key '" + key + "' must be a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

std::string as_string(const json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return j.get<std::string>();
}

std::vector<double> as_double_array(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("config key '" + key + "' must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(as_double(v, key));
  return out;
}

std::vector<std::vector<double>> as_double_matrix(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("config key '" + key + "' must be an array of arrays");
  std::vector<std::vector<double>> out;
  out.reserve(j.size());
  for (const auto& row : j) out.push_back(as_double_array(row, key));
  return out;
}

}  // namespace

Shape RunConfig::image_shape() const {
  if (channels == 1) return {height, width};
  return {channels, height, width};
}

RunConfig parse_config(const nlohmann::json& flat) {
  if (!flat.is_object()) throw ConfigError("config root must be a JSON object");
  RunConfig cfg;
  cfg.raw = flat;

  bool samples_three_phase = false;
  std::size_t n_const = 1, n_e = 1, n_m = 1, n_l = 1;
  double s1 = 0.5, s2 = 0.9;

  for (const auto& [key, value] : flat.items()) {
    if (known_keys().count(key) == 0) throw ConfigError("unknown config key '" + key + "'");

    if (key == "image.height") cfg.height = as_size(value, key);
    else if (key == "image.width") cfg.width = as_size(value, key);
    else if (key == "image.channels") cfg.channels = as_size(value, key);
    else if (key == "task.kind") cfg.task.op.kind = op_kind_from_name(as_string(value, key));
    else if (key == "task.kernel_size") cfg.task.op.kernel_size = as_size(value, key);
    else if (key == "task.sigma_blur") cfg.task.op.sigma_blur = as_double(value, key);
    else if (key == "task.stride") cfg.task.op.stride = as_size(value, key);
    else if (key == "task.half_size") cfg.task.op.half_size = as_size(value, key);
    else if (key == "task.missing_prob") cfg.task.op.missing_prob = as_double(value, key);
    else if (key == "task.mask_seed") cfg.task.op.mask_seed = as_u64(value, key);
    else if (key == "task.noise_sigma") cfg.task.noise_sigma = as_double(value, key);
    else if (key == "task.degradation_seed") {
      cfg.task.degradation_seed = as_u64(value, key);
      cfg.degradation_seed_set = true;
    } else if (key == "prior.kind") cfg.prior.kind = as_string(value, key);
    else if (key == "prior.mean") cfg.prior.mean_scalar = as_double(value, key);
    else if (key == "prior.mean_values") cfg.prior.mean_values = as_double_array(value, key);
    else if (key == "prior.variance") {
      cfg.prior.variance = value.is_array() ? as_double_array(value, key)
                                            : std::vector<double>{as_double(value, key)};
    } else if (key == "prior.weights") cfg.prior.weights = as_double_array(value, key);
    else if (key == "prior.means") cfg.prior.means = as_double_matrix(value, key);
    else if (key == "prior.variances") {
      if (value.is_array() && !value.empty() && value.front().is_array()) {
        cfg.prior.variances = as_double_matrix(value, key);
      } else {
        for (double v : as_double_array(value, key)) cfg.prior.variances.push_back({v});
      }
    } else if (key == "prior.component_sigma") cfg.prior.component_sigma = as_double(value, key);
    else if (key == "prior.mlp_path") cfg.prior.mlp_path = as_string(value, key);
    else if (key == "solver.kind") cfg.solver_kind = solver_kind_from_name(as_string(value, key));
    else if (key == "solver.tau") cfg.tau = as_double(value, key);
    else if (key == "solver.iterations") cfg.iterations = as_size(value, key);
    else if (key == "solver.t_min") cfg.t_min = as_double(value, key);
    else if (key == "solver.t_max") cfg.t_max = as_double(value, key);
    else if (key == "solver.gamma") cfg.gamma = as_double(value, key);
    else if (key == "solver.samples.kind") {
      const std::string kind = as_string(value, key);
      if (kind == "constant") samples_three_phase = false;
      else if (kind == "three_phase") samples_three_phase = true;
      else throw ConfigError("config key 'solver.samples.kind' must be 'constant' or 'three_phase'");
    } else if (key == "solver.samples.N") n_const = as_size(value, key);
    else if (key == "solver.samples.N_e") n_e = as_size(value, key);
    else if (key == "solver.samples.N_m") n_m = as_size(value, key);
    else if (key == "solver.samples.N_l") n_l = as_size(value, key);
    else if (key == "solver.samples.s1") s1 = as_double(value, key);
    else if (key == "solver.samples.s2") s2 = as_double(value, key);
    else if (key == "solver.estimator") {
      const std::string mode = as_string(value, key);
      if (mode == "monte_carlo") cfg.estimator = EstimatorConfig::Mode::monte_carlo;
      else if (mode == "exact_gaussian") cfg.estimator = EstimatorConfig::Mode::exact_gaussian;
      else throw ConfigError("config key 'solver.estimator' must be 'monte_carlo' or 'exact_gaussian'");
    } else if (key == "solver.snapshot_every") cfg.snapshot_every = as_size(value, key);
    else if (key == "corpus.seed") cfg.corpus.seed = as_u64(value, key);
    else if (key == "corpus.templates") cfg.corpus.n_templates = as_size(value, key);
    else if (key == "corpus.jitter_sigma") cfg.corpus.jitter_sigma = as_double(value, key);
    else if (key == "bench.images") cfg.bench_images = as_size(value, key);
    else if (key == "bench.methods") {
      if (!value.is_array()) throw ConfigError("config key 'bench.methods' must be an array of objects");
    } else if (key == "bench.bootstrap_resamples") cfg.bootstrap_resamples = as_size(value, key);
    else if (key == "bench.bootstrap_seed") cfg.bootstrap_seed = as_u64(value, key);
    else if (key == "bench.pnp_tau") cfg.pnp_tau = as_double(value, key);
    else if (key == "io.manifest") cfg.manifest_rel = as_string(value, key);
    else if (key == "io.image_index") cfg.image_index = as_size(value, key);
    else if (key == "probe.t_grid") cfg.probe_t_grid = as_double_array(value, key);
    else if (key == "probe.points") cfg.probe_points = as_size(value, key);
    else if (key == "probe.power_iters") cfg.probe_power_iters = as_size(value, key);
    else if (key == "probe.tol") cfg.probe_tol = as_double(value, key);
    else if (key == "exec") {
      const std::string mode = as_string(value, key);
      if (mode == "serial") cfg.exec = Exec::serial;
      else if (mode == "parallel") cfg.exec = Exec::parallel;
      else throw ConfigError("config key 'exec' must be 'serial' or 'parallel'");
    } else if (key == "seed") cfg.seed = as_u64(value, key);
    // "name" is only meaningful inside bench.methods fragments; ignore here.
  }

  if (cfg.iterations == 0) throw ConfigError("config key 'solver.iterations' must be >= 1");
  if (cfg.height == 0 || cfg.width == 0 || cfg.channels == 0) {
    throw ConfigError("image dimensions must be >= 1");
  }

  try {
    cfg.samples = samples_three_phase ? SampleSchedule::three_phase(n_e, n_m, n_l, s1, s2)
                                      : SampleSchedule::constant(n_const);
    // Validate the time schedule eagerly so bad configs fail at parse time.
    TimeSchedule(cfg.t_min, cfg.t_max, cfg.gamma, cfg.iterations);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("invalid schedule: ") + e.what());
  }
  cfg.corpus.height = cfg.height;
  cfg.corpus.width = cfg.width;
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse config " + path + ": " + e.what());
  }
  return parse_config(j);
}

SolverConfig make_solver_config(const RunConfig& cfg) {
  SolverConfig sc;
  sc.tau = cfg.tau;
  sc.times = TimeSchedule(cfg.t_min, cfg.t_max, cfg.gamma, cfg.iterations);
  sc.samples = cfg.samples;
  sc.estimator.mode = cfg.estimator;
  sc.estimator.exec = cfg.exec;
  sc.seed = cfg.seed;
  sc.snapshot_every = cfg.snapshot_every;
  return sc;
}

FlowPrior build_prior(const RunConfig& cfg) {
  const PriorSpecCfg& p = cfg.prior;
  if (p.kind == "gaussian") {
    Tensor mean = p.mean_values.empty()
                      ? Tensor::full(cfg.image_shape(), p.mean_scalar.value_or(0.0))
                      : Tensor({p.mean_values.size()}, p.mean_values);
    return GaussianPrior(std::move(mean), p.variance);
  }
  if (p.kind == "gmm") {
    if (p.weights.empty() || p.means.size() != p.weights.size()) {
      throw ConfigError("gmm prior needs matching 'prior.weights' and 'prior.means'");
    }
    std::vector<GmmPrior::Component> components;
    for (std::size_t k = 0; k < p.means.size(); ++k) {
      std::vector<double> var =
          p.variances.empty() ? std::vector<double>{1.0} : p.variances[std::min(k, p.variances.size() - 1)];
      components.push_back(GmmPrior::Component{Tensor({p.means[k].size()}, p.means[k]), std::move(var)});
    }
    return GmmPrior(p.weights, std::move(components));
  }
  if (p.kind == "corpus_gmm") {
    if (cfg.channels != 1) throw ConfigError("corpus_gmm prior needs a single-channel image");
    CorpusSpec spec = cfg.corpus;
    if (p.component_sigma.has_value()) spec.jitter_sigma = *p.component_sigma;
    return corpus_gmm_prior(spec);
  }
  if (p.kind == "mlp") {
    if (p.mlp_path.empty()) throw ConfigError("mlp prior needs 'prior.mlp_path'");
    return load_mlp(p.mlp_path);
  }
  throw ConfigError("unknown prior kind '" + p.kind + "'");
}

std::vector<MethodSpec> bench_methods(const RunConfig& cfg) {
  std::vector<nlohmann::json> fragments;
  if (cfg.raw.contains("bench.methods")) {
    for (const auto& frag : cfg.raw.at("bench.methods")) {
      if (!frag.is_object()) throw ConfigError("bench.methods entries must be objects");
      fragments.push_back(frag);
    }
  } else {
    fragments.push_back({{"name", "flowadmm"}, {"solver.kind", "flowadmm"}});
    fragments.push_back({{"name", "pnpflow"}, {"solver.kind", "pnpflow"}, {"solver.tau", cfg.pnp_tau}});
  }

  std::vector<MethodSpec> methods;
  for (std::size_t i = 0; i < fragments.size(); ++i) {
    nlohmann::json merged = cfg.raw;
    merged.erase("bench.methods");
    for (const auto& [key, value] : fragments[i].items()) merged[key] = value;
    const RunConfig method_cfg = parse_config(merged);
    MethodSpec spec;
    spec.name = fragments[i].contains("name") ? fragments[i].at("name").get<std::string>()
                                              : "method" + std::to_string(i);
    spec.kind = method_cfg.solver_kind;
    spec.solver = make_solver_config(method_cfg);
    methods.push_back(std::move(spec));
  }
  return methods;
}

}  // namespace flowadmm
