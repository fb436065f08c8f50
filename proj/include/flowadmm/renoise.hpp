#pragma once

#include <cstdint>
#include <functional>

#include "flowadmm/flow_prior.hpp"
#include "flowadmm/rng.hpp"
#include "flowadmm/tensor.hpp"

namespace flowadmm {

// Power-law time schedule t_k = t_min + ((k+1)/K)^gamma (t_max - t_min).
struct TimeSchedule {
  double t_min = 0.0;
  double t_max = 0.0;
  double gamma = 1.0;
  std::size_t iterations = 1;  // K

  TimeSchedule() = default;
  TimeSchedule(double t_min_, double t_max_, double gamma_, std::size_t iterations_);
  double eval(std::size_t k) const;
};

// Per-iteration Monte Carlo sample counts: constant, or the three-phase
// step schedule with boundaries at k/K = s1 and s2 (half-open intervals, so
// s2 = 1 means the late phase never fires).
struct SampleSchedule {
  enum class Kind { constant, three_phase };
  Kind kind = Kind::constant;
  std::size_t n_constant = 1;
  std::size_t n_early = 1, n_mid = 1, n_late = 1;
  double s1 = 0.5, s2 = 0.9;

  static SampleSchedule constant(std::size_t n);
  static SampleSchedule three_phase(std::size_t n_early, std::size_t n_mid, std::size_t n_late, double s1, double s2);
  std::size_t eval(std::size_t k, std::size_t total_iterations) const;
  std::size_t total(std::size_t total_iterations) const;
};

enum class Exec { serial, parallel };

// Exact mean renoise-denoise operator for a Gaussian prior: the denoiser is
// affine, so the expectation over the renoising noise collapses to
// mu + t m (x - mu) per coordinate.
Tensor mean_denoise_exact_gaussian(const GaussianPrior& prior, double t, const Tensor& x);

// Monte Carlo estimator (1/N) sum_i D_t(t x + (1-t) eps_i). Each sample i
// draws its noise from the child stream fork(base, i) where `base` is one
// u64 consumed from `rng`, and the per-coordinate accumulation runs in
// sample-index order; serial and parallel execution are therefore
// bitwise-identical and independent of thread count.
Tensor mean_denoise_mc(const FlowPrior& prior, double t, const Tensor& x, std::size_t n_samples, SeededRng& rng,
                       Exec exec = Exec::parallel);

// Serial reference for the estimator above; kept for the equivalence tests
// and the kernel benchmark.
Tensor mean_denoise_mc_serial(const FlowPrior& prior, double t, const Tensor& x, std::size_t n_samples,
                              SeededRng& rng);

struct EstimatorConfig {
  enum class Mode { exact_gaussian, monte_carlo };
  Mode mode = Mode::monte_carlo;
  Exec exec = Exec::parallel;
};

Tensor mean_denoise(const FlowPrior& prior, double t, const Tensor& x, std::size_t n_samples,
                    const EstimatorConfig& cfg, SeededRng& rng);

// Residual operator R_t(x) = S_t(x) - x under the configured estimator.
Tensor residual(const FlowPrior& prior, double t, const Tensor& x, std::size_t n_samples,
                const EstimatorConfig& cfg, SeededRng& rng);

// Lipschitz bound of the residual operator from the velocity bound:
// xi = (1-t)(1 + t L_v).
double lemma1_bound(double t, double velocity_lipschitz);

struct SpectralNormResult {
  double value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

// Matrix-free power iteration on Jᵀ J for the Jacobian of `field` at x.
// J w uses central differences; Jᵀ w is the gradient of <field(·), w>,
// also by central differences (the coordinate loop is embarrassingly
// parallel and runs under OpenMP). For affine fields both are exact.
SpectralNormResult jacobian_spectral_norm(const std::function<Tensor(const Tensor&)>& field, const Tensor& x,
                                          std::size_t iters, double tol, double fd_step);

// Default probe step 1e-5 (1 + ||x||_inf).
double default_fd_step(const Tensor& x);

struct DeviationStats {
  double mean = 0.0;
  double max = 0.0;
  std::size_t n_points = 0;
};

// Measures ||S_t(x) - x|| over draws x ~ p1. The identity holds exactly only
// for degenerate priors; for diffuse priors this reports how far the mean
// operator is from a projection.
DeviationStats remark1_deviation(const FlowPrior& prior, double t, std::size_t n_points, std::size_t n_samples,
                                 SeededRng& rng);

}  // namespace flowadmm
