#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowadmm/bench.hpp"
#include "flowadmm/solvers.hpp"
#include "flowadmm/tasks.hpp"

namespace flowadmm {

// Prior description as written in a config; realized by build_prior().
struct PriorSpecCfg {
  std::string kind = "corpus_gmm";  // gaussian | gmm | corpus_gmm | mlp
  std::optional<double> mean_scalar;
  std::vector<double> mean_values;
  std::vector<double> variance{1.0};
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> variances;
  std::optional<double> component_sigma;
  std::string mlp_path;
};

// Parsed run configuration. The config file is flat JSON with dotted keys
// (see configs/schema.json); unknown keys are rejected by name.
struct RunConfig {
  std::size_t height = 32, width = 32, channels = 1;

  TaskSpec task;
  bool degradation_seed_set = false;

  PriorSpecCfg prior;

  SolverKind solver_kind = SolverKind::flowadmm;
  double tau = 1.0;
  std::size_t iterations = 100;
  double t_min = 0.3, t_max = 0.95, gamma = 1.0;
  SampleSchedule samples = SampleSchedule::constant(1);
  EstimatorConfig::Mode estimator = EstimatorConfig::Mode::monte_carlo;
  std::size_t snapshot_every = 0;
  Exec exec = Exec::parallel;

  std::uint64_t seed = 0;

  CorpusSpec corpus;
  std::size_t bench_images = 16;
  std::size_t bootstrap_resamples = 10000;
  std::uint64_t bootstrap_seed = 0xB00757ULL;
  double pnp_tau = 1.0;

  std::string manifest_rel = "degrade/manifest.json";
  std::size_t image_index = 0;

  std::vector<double> probe_t_grid;
  std::size_t probe_points = 4;
  std::size_t probe_power_iters = 30;
  double probe_tol = 1e-9;

  nlohmann::json raw;  // original flat object, kept for method-fragment merges

  Shape image_shape() const;
  std::uint64_t effective_degradation_seed() const {
    return degradation_seed_set ? task.degradation_seed : seed;
  }
};

RunConfig parse_config(const nlohmann::json& flat);
RunConfig load_config_file(const std::string& path);

SolverConfig make_solver_config(const RunConfig& cfg);
FlowPrior build_prior(const RunConfig& cfg);

// Benchmark method list: explicit "bench.methods" fragments merged over the
// base config, or the default flowadmm-vs-pnpflow pair.
std::vector<MethodSpec> bench_methods(const RunConfig& cfg);

}  // namespace flowadmm
