#include "flowadmm/renoise.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace flowadmm {

TimeSchedule::TimeSchedule(double t_min_, double t_max_, double gamma_, std::size_t iterations_)
    : t_min(t_min_), t_max(t_max_), gamma(gamma_), iterations(iterations_) {
  // t_max = 1 is admitted (every denoiser here is an exact identity at
  // t = 1); the non-stationary convergence analysis still needs t_max < 1.
  if (!(t_min >= 0.0 && t_min <= t_max && t_max <= 1.0)) {
    throw ParameterError("TimeSchedule: need 0 <= t_min <= t_max <= 1");
  }
  if (!(gamma > 0.0)) throw ParameterError("TimeSchedule: gamma must be > 0");
  if (iterations == 0) throw ParameterError("TimeSchedule: K must be >= 1");
}

double TimeSchedule::eval(std::size_t k) const {
  if (k >= iterations) throw ParameterError("TimeSchedule: k out of range");
  if (k + 1 == iterations) return t_max;  // ratio is exactly 1
  const double ratio = static_cast<double>(k + 1) / static_cast<double>(iterations);
  return t_min + std::pow(ratio, gamma) * (t_max - t_min);
}

SampleSchedule SampleSchedule::constant(std::size_t n) {
  if (n == 0) throw ParameterError("SampleSchedule: N must be >= 1");
  SampleSchedule s;
  s.kind = Kind::constant;
  s.n_constant = n;
  return s;
}

SampleSchedule SampleSchedule::three_phase(std::size_t n_early, std::size_t n_mid, std::size_t n_late, double s1,
                                           double s2) {
  if (n_early == 0 || n_mid == 0 || n_late == 0) throw ParameterError("SampleSchedule: all N must be >= 1");
  if (!(0.0 < s1 && s1 < s2 && s2 <= 1.0)) throw ParameterError("SampleSchedule: need 0 < s1 < s2 <= 1");
  SampleSchedule s;
  s.kind = Kind::three_phase;
  s.n_early = n_early;
  s.n_mid = n_mid;
  s.n_late = n_late;
  s.s1 = s1;
  s.s2 = s2;
  return s;
}

std::size_t SampleSchedule::eval(std::size_t k, std::size_t total_iterations) const {
  if (k >= total_iterations) throw ParameterError("SampleSchedule: k out of range");
  if (kind == Kind::constant) return n_constant;
  const double frac = static_cast<double>(k) / static_cast<double>(total_iterations);
  if (frac < s1) return n_early;
  if (frac < s2) return n_mid;
  return n_late;
}

std::size_t SampleSchedule::total(std::size_t total_iterations) const {
  std::size_t sum = 0;
  for (std::size_t k = 0; k < total_iterations; ++k) sum += eval(k, total_iterations);
  return sum;
}

Tensor mean_denoise_exact_gaussian(const GaussianPrior& prior, double t, const Tensor& x) {
  if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("mean_denoise_exact_gaussian: t outside [0,1]");
  require_same_shape(x, prior.mean, "mean_denoise_exact_gaussian");
  if (t == 1.0) return x;
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = gaussian_shrink_factor(prior.variance_at(i), t);
    out[i] = prior.mean[i] + t * m * (x[i] - prior.mean[i]);
  }
  return out;
}

namespace {

// One renoised-and-denoised sample: D_t(t x + (1-t) eps) with eps from the
// child stream for this sample index.
Tensor mc_sample(const FlowPrior& prior, double t, const Tensor& x, std::uint64_t base_key, std::size_t index) {
  SeededRng child(mix_seed(base_key, index));
  Tensor eps = child.standard_normal(x.shape());
  Tensor renoised = Tensor::zeros(x.shape());
  for (std::size_t j = 0; j < x.size(); ++j) renoised[j] = t * x[j] + (1.0 - t) * eps[j];
  return denoiser_apply(prior, t, renoised);
}

}  // namespace

Tensor mean_denoise_mc_serial(const FlowPrior& prior, double t, const Tensor& x, std::size_t n_samples,
                              SeededRng& rng) {
  if (n_samples == 0) throw ParameterError("mean_denoise_mc: N must be >= 1");
  if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("mean_denoise_mc: t outside [0,1]");
  const std::uint64_t base_key = rng.next_u64();
  Tensor acc = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < n_samples; ++i) {
    const Tensor sample = mc_sample(prior, t, x, base_key, i);
    for (std::size_t j = 0; j < x.size(); ++j) acc[j] += sample[j];
  }
  acc *= 1.0 / static_cast<double>(n_samples);
  return acc;
}

Tensor mean_denoise_mc(const FlowPrior& prior, double t, const Tensor& x, std::size_t n_samples, SeededRng& rng,
                       Exec exec) {
  if (exec == Exec::serial) return mean_denoise_mc_serial(prior, t, x, n_samples, rng);
  if (n_samples == 0) throw ParameterError("mean_denoise_mc: N must be >= 1");
  if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("mean_denoise_mc: t outside [0,1]");
  const std::uint64_t base_key = rng.next_u64();
  const std::size_t n = x.size();
  Tensor acc = Tensor::zeros(x.shape());

  // Samples are materialized in blocks; the reduction then walks each
  // coordinate over sample indices in ascending order, which reproduces the
  // serial accumulation bit for bit.
  constexpr std::size_t kBlock = 256;
  std::vector<Tensor> block(std::min(n_samples, kBlock));
  for (std::size_t start = 0; start < n_samples; start += kBlock) {
    const std::size_t count = std::min(kBlock, n_samples - start);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long bi = 0; bi < static_cast<long long>(count); ++bi) {
      block[static_cast<std::size_t>(bi)] = mc_sample(prior, t, x, base_key, start + static_cast<std::size_t>(bi));
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long j = 0; j < static_cast<long long>(n); ++j) {
      double local = acc[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < count; ++i) local += block[i][static_cast<std::size_t>(j)];
      acc[static_cast<std::size_t>(j)] = local;
    }
  }
  acc *= 1.0 / static_cast<double>(n_samples);
  return acc;
}

Tensor mean_denoise(const FlowPrior& prior, double t, const Tensor& x, std::size_t n_samples,
                    const EstimatorConfig& cfg, SeededRng& rng) {
  if (cfg.mode == EstimatorConfig::Mode::exact_gaussian) {
    const auto* g = std::get_if<GaussianPrior>(&prior);
    if (g == nullptr) throw UnsupportedError("mean_denoise: exact_gaussian estimator needs a Gaussian prior");
    return mean_denoise_exact_gaussian(*g, t, x);
  }
  return mean_denoise_mc(prior, t, x, n_samples, rng, cfg.exec);
}

Tensor residual(const FlowPrior& prior, double t, const Tensor& x, std::size_t n_samples,
                const EstimatorConfig& cfg, SeededRng& rng) {
  Tensor s = mean_denoise(prior, t, x, n_samples, cfg, rng);
  s -= x;
  return s;
}

double lemma1_bound(double t, double velocity_lipschitz) {
  if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("lemma1_bound: t outside [0,1]");
  if (!(velocity_lipschitz >= 0.0)) throw ParameterError("lemma1_bound: L_v must be >= 0");
  return (1.0 - t) * (1.0 + t * velocity_lipschitz);
}

double default_fd_step(const Tensor& x) { return 1e-5 * (1.0 + max_abs(x)); }

namespace {

Tensor fd_jvp(const std::function<Tensor(const Tensor&)>& field, const Tensor& x, const Tensor& w, double h) {
  Tensor xp = x;
  Tensor xm = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] += h * w[i];
    xm[i] -= h * w[i];
  }
  Tensor out = field(xp);
  out -= field(xm);
  out *= 1.0 / (2.0 * h);
  return out;
}

Tensor fd_vjp(const std::function<Tensor(const Tensor&)>& field, const Tensor& x, const Tensor& w, double h) {
  Tensor out = Tensor::zeros(x.shape());
  const long long n = static_cast<long long>(x.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long j = 0; j < n; ++j) {
    Tensor xp = x;
    Tensor xm = x;
    xp[static_cast<std::size_t>(j)] += h;
    xm[static_cast<std::size_t>(j)] -= h;
    const Tensor fp = field(xp);
    const Tensor fm = field(xm);
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += (fp[i] - fm[i]) * w[i];
    out[static_cast<std::size_t>(j)] = acc / (2.0 * h);
  }
  return out;
}

}  // namespace

SpectralNormResult jacobian_spectral_norm(const std::function<Tensor(const Tensor&)>& field, const Tensor& x,
                                          std::size_t iters, double tol, double fd_step) {
  if (iters == 0) throw ParameterError("jacobian_spectral_norm: iters must be >= 1");
  if (!(fd_step > 0.0)) throw ParameterError("jacobian_spectral_norm: fd_step must be > 0");

  // Deterministic pseudo-random start direction.
  SeededRng init(0x5EEDF00DULL);
  Tensor w = init.standard_normal(x.shape());
  w *= 1.0 / norm2(w);

  SpectralNormResult result;
  double prev = -1.0;
  for (std::size_t k = 0; k < iters; ++k) {
    Tensor jw = fd_jvp(field, x, w, fd_step);
    const double sigma = norm2(jw);
    result.value = sigma;
    result.iterations = k + 1;
    if (sigma == 0.0) {
      result.converged = true;
      return result;
    }
    jw *= 1.0 / sigma;
    Tensor jtw = fd_vjp(field, x, jw, fd_step);
    const double back = norm2(jtw);
    if (back == 0.0) {
      result.converged = true;
      return result;
    }
    jtw *= 1.0 / back;
    w = std::move(jtw);
    if (prev >= 0.0 && std::fabs(sigma - prev) < tol) {
      result.converged = true;
      return result;
    }
    prev = sigma;
  }
  result.converged = false;  // best estimate so far
  return result;
}

DeviationStats remark1_deviation(const FlowPrior& prior, double t, std::size_t n_points, std::size_t n_samples,
                                 SeededRng& rng) {
  if (!is_analytic(prior)) throw UnsupportedError("remark1_deviation: needs an analytic prior");
  DeviationStats stats;
  stats.n_points = n_points;
  for (std::size_t p = 0; p < n_points; ++p) {
    Tensor x = sample_prior(prior, rng);
    Tensor s = mean_denoise_mc(prior, t, x, n_samples, rng);
    const double dev = l2_distance(s, x);
    stats.mean += dev;
    stats.max = std::max(stats.max, dev);
  }
  if (n_points > 0) stats.mean /= static_cast<double>(n_points);
  return stats;
}

}  // namespace flowadmm
