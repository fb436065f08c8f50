#include "flowadmm/bench.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "flowadmm/io.hpp"

namespace flowadmm {

std::string solver_kind_name(SolverKind kind) {
  return kind == SolverKind::flowadmm ? "flowadmm" : "pnpflow";
}

SolverKind solver_kind_from_name(const std::string& name) {
  if (name == "flowadmm") return SolverKind::flowadmm;
  if (name == "pnpflow") return SolverKind::pnpflow;
  throw ConfigError("unknown solver kind '" + name + "'");
}

namespace {

double quantile(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - std::floor(h);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

BootstrapCi paired_bootstrap_ci(const std::vector<double>& deltas, std::size_t resamples, std::uint64_t seed,
                                double confidence) {
  if (deltas.empty()) throw ParameterError("paired_bootstrap_ci: no paired samples");
  if (resamples == 0) throw ParameterError("paired_bootstrap_ci: resamples must be >= 1");
  const std::size_t n = deltas.size();

  BootstrapCi ci;
  for (double d : deltas) ci.mean += d;
  ci.mean /= static_cast<double>(n);

  std::vector<double> means(resamples);
  const long long r_count = static_cast<long long>(resamples);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long r = 0; r < r_count; ++r) {
    SeededRng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += deltas[rng.next_u64() % n];
    means[static_cast<std::size_t>(r)] = acc / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double alpha = 1.0 - confidence;
  ci.lo = quantile(means, alpha / 2.0);
  ci.hi = quantile(means, 1.0 - alpha / 2.0);
  return ci;
}

namespace {

RunResult run_method(const MethodSpec& method, const DiagonalizableOp& op, const Tensor& y,
                     const FlowPrior& prior, const MetricFn& metric) {
  if (method.kind == SolverKind::flowadmm) return flow_admm_run(op, y, prior, method.solver, metric);
  return pnp_flow_run(op, y, prior, method.solver, metric);
}

}  // namespace

BenchReport run_benchmark(const std::vector<Tensor>& images, const TaskSpec& task,
                          const std::vector<MethodSpec>& methods, const FlowPrior& prior,
                          const BenchOptions& opts) {
  if (images.size() < 2) throw ParameterError("run_benchmark: need at least 2 images");
  if (methods.empty()) throw ParameterError("run_benchmark: need at least one method");

  const DiagonalizableOp op = DiagonalizableOp::make(images.front().shape(), task.op);

  BenchReport report;
  for (const MethodSpec& m : methods) report.method_names.push_back(m.name);
  report.per_image.resize(images.size());

  const long long n_images = static_cast<long long>(images.size());
  [[maybe_unused]] const bool parallel_images = opts.exec == Exec::parallel;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel_images)
#endif
  for (long long ii = 0; ii < n_images; ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    const Tensor& x = images[i];

    // Shared degradation per image: one stream keyed by (task seed, image
    // index), identical for every method.
    SeededRng degrade_rng(mix_seed(task.degradation_seed, i));
    const Tensor y = degrade(x, task, op, degrade_rng);

    PerImageMetrics row;
    const Tensor shown = degraded_display(y, op);
    row.psnr_degraded = psnr(shown, x);
    row.ssim_degraded = ssim(shown, x);

    for (std::size_t m = 0; m < methods.size(); ++m) {
      MethodSpec method = methods[m];
      method.solver.seed = mix_seed(mix_seed(opts.master_seed, m), i);
      try {
        const RunResult res = run_method(method, op, y, prior, {});
        const Tensor recon = clip01(res.reconstruction);
        row.psnr.push_back(psnr(recon, x));
        row.ssim.push_back(ssim(recon, x));
        row.failed.push_back(false);
      } catch (const DivergenceError&) {
        row.psnr.push_back(std::numeric_limits<double>::quiet_NaN());
        row.ssim.push_back(std::numeric_limits<double>::quiet_NaN());
        row.failed.push_back(true);
      }
    }
    report.per_image[i] = std::move(row);
  }

  // Ordered aggregation.
  report.mean_psnr.assign(methods.size(), 0.0);
  report.mean_ssim.assign(methods.size(), 0.0);
  std::vector<std::size_t> ok_count(methods.size(), 0);
  for (const PerImageMetrics& row : report.per_image) {
    report.mean_psnr_degraded += row.psnr_degraded;
    report.mean_ssim_degraded += row.ssim_degraded;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      if (row.failed[m]) {
        ++report.failure_count;
        continue;
      }
      report.mean_psnr[m] += row.psnr[m];
      report.mean_ssim[m] += row.ssim[m];
      ++ok_count[m];
    }
  }
  report.mean_psnr_degraded /= static_cast<double>(images.size());
  report.mean_ssim_degraded /= static_cast<double>(images.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    if (ok_count[m] > 0) {
      report.mean_psnr[m] /= static_cast<double>(ok_count[m]);
      report.mean_ssim[m] /= static_cast<double>(ok_count[m]);
    } else {
      report.mean_psnr[m] = std::numeric_limits<double>::quiet_NaN();
      report.mean_ssim[m] = std::numeric_limits<double>::quiet_NaN();
    }
  }

  for (std::size_t a = 0; a < methods.size(); ++a) {
    for (std::size_t b = a + 1; b < methods.size(); ++b) {
      PairwiseDelta delta;
      delta.method_a = a;
      delta.method_b = b;
      std::vector<double> diffs;
      for (const PerImageMetrics& row : report.per_image) {
        if (row.failed[a] || row.failed[b]) continue;
        diffs.push_back(row.psnr[a] - row.psnr[b]);
      }
      delta.paired_images = diffs.size();
      if (!diffs.empty()) {
        delta.psnr_ci = paired_bootstrap_ci(diffs, opts.bootstrap_resamples, opts.bootstrap_seed);
      }
      report.pairwise.push_back(delta);
    }
  }
  return report;
}

void BenchReport::write_csv(const std::filesystem::path& path) const {
  std::ostringstream os;
  os << "image,psnr_degraded,ssim_degraded";
  for (const std::string& name : method_names) os << ",psnr_" << name << ",ssim_" << name;
  os << "\n";
  for (std::size_t i = 0; i < per_image.size(); ++i) {
    const PerImageMetrics& row = per_image[i];
    os << i << "," << format_double(row.psnr_degraded) << "," << format_double(row.ssim_degraded);
    for (std::size_t m = 0; m < method_names.size(); ++m) {
      if (row.failed[m]) {
        os << ",failed,failed";
      } else {
        os << "," << format_double(row.psnr[m]) << "," << format_double(row.ssim[m]);
      }
    }
    os << "\n";
  }
  write_text_file(path, os.str());
}

std::string BenchReport::summary_json(const std::string& task_name) const {
  nlohmann::json j;
  j["task"] = task_name;
  j["images"] = per_image.size();
  j["failures"] = failure_count;
  j["degraded"] = {{"mean_psnr", mean_psnr_degraded}, {"mean_ssim", mean_ssim_degraded}};
  nlohmann::json methods = nlohmann::json::array();
  for (std::size_t m = 0; m < method_names.size(); ++m) {
    methods.push_back({{"method", method_names[m]},
                       {"mean_psnr", mean_psnr[m]},
                       {"mean_ssim", mean_ssim[m]}});
  }
  j["methods"] = methods;
  nlohmann::json pairs = nlohmann::json::array();
  for (const PairwiseDelta& d : pairwise) {
    pairs.push_back({{"pair", method_names[d.method_a] + " - " + method_names[d.method_b]},
                     {"delta_psnr_mean", d.psnr_ci.mean},
                     {"ci_low", d.psnr_ci.lo},
                     {"ci_high", d.psnr_ci.hi},
                     {"paired_images", d.paired_images}});
  }
  j["pairwise"] = pairs;
  return j.dump(2) + "\n";
}

}  // namespace flowadmm
