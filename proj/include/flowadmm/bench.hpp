#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flowadmm/solvers.hpp"
#include "flowadmm/tasks.hpp"

namespace flowadmm {

enum class SolverKind { flowadmm, pnpflow };

std::string solver_kind_name(SolverKind kind);
SolverKind solver_kind_from_name(const std::string& name);

struct MethodSpec {
  std::string name;
  SolverKind kind = SolverKind::flowadmm;
  SolverConfig solver;
};

struct BootstrapCi {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile bootstrap CI on the mean of paired per-image differences;
// deterministic given the seed.
BootstrapCi paired_bootstrap_ci(const std::vector<double>& deltas, std::size_t resamples, std::uint64_t seed,
                                double confidence = 0.95);

struct PerImageMetrics {
  double psnr_degraded = 0.0;
  double ssim_degraded = 0.0;
  std::vector<double> psnr;  // per method
  std::vector<double> ssim;
  std::vector<bool> failed;
};

struct PairwiseDelta {
  std::size_t method_a = 0;  // delta = metric[a] - metric[b]
  std::size_t method_b = 0;
  BootstrapCi psnr_ci;
  std::size_t paired_images = 0;
};

struct BenchReport {
  std::vector<std::string> method_names;
  std::vector<PerImageMetrics> per_image;
  double mean_psnr_degraded = 0.0;
  double mean_ssim_degraded = 0.0;
  std::vector<double> mean_psnr;  // per method, over non-failed images
  std::vector<double> mean_ssim;
  std::vector<PairwiseDelta> pairwise;
  std::size_t failure_count = 0;

  void write_csv(const std::filesystem::path& path) const;
  std::string summary_json(const std::string& task_name) const;
};

struct BenchOptions {
  std::uint64_t master_seed = 0;
  std::size_t bootstrap_resamples = 10000;
  std::uint64_t bootstrap_seed = 0xB00757ULL;
  Exec exec = Exec::parallel;
};

// Paired benchmark: every method sees the byte-identical degraded tensor per
// image (shared degradation stream), reconstructions are clipped to [0,1]
// before metrics, and per-method means skip failed images. Images run in
// parallel with per-image seeds, merged in index order.
BenchReport run_benchmark(const std::vector<Tensor>& images, const TaskSpec& task,
                          const std::vector<MethodSpec>& methods, const FlowPrior& prior, const BenchOptions& opts);

}  // namespace flowadmm
