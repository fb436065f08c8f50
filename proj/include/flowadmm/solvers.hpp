#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "flowadmm/flow_prior.hpp"
#include "flowadmm/linops.hpp"
#include "flowadmm/renoise.hpp"

namespace flowadmm {

struct AdmmState {
  Tensor x;
  Tensor z;
  Tensor u;
  std::size_t iteration = 0;
};

struct SolverConfig {
  double tau = 1.0;  // data-term penalty (tau = 1/rho); PnP-Flow uses it as the gradient step
  TimeSchedule times;
  SampleSchedule samples;
  EstimatorConfig estimator;
  std::uint64_t seed = 0;
  std::size_t snapshot_every = 0;  // 0 disables snapshots

  std::size_t iterations() const { return times.iterations; }
};

struct IterationRecord {
  std::size_t k = 0;
  double t_k = 0.0;
  std::size_t n_k = 0;
  double primal_residual = 0.0;  // ||x_{k+1} - z_{k+1}||
  double dz = 0.0;               // ||z_{k+1} - z_k||
  double u_norm = 0.0;
  double psnr = std::numeric_limits<double>::quiet_NaN();
};

struct Snapshot {
  std::size_t k = 0;
  AdmmState state;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  std::size_t total_denoiser_evals = 0;
  std::vector<Snapshot> snapshots;

  void write_csv(const std::filesystem::path& path) const;
};

struct RunResult {
  Tensor reconstruction;  // z_K
  RunTrace trace;
  AdmmState final_state;
};

using MetricFn = std::function<double(const Tensor&)>;

// One FlowADMM triple update:
//   x+ = prox(z - u);  z+ = denoise(x+ + u, t, N);  u+ = u + x+ - z+.
// Exposed with callables so property tests can swap the pieces.
using ProxCallable = std::function<Tensor(const Tensor&)>;
using DenoiseCallable = std::function<Tensor(const Tensor&, double, std::size_t)>;
AdmmState flow_admm_step(const AdmmState& state, const ProxCallable& prox, const DenoiseCallable& denoise,
                         double t_k, std::size_t n_k);

// FlowADMM end to end: init x = z = Aᵀy, u = 0, iterate the triple update
// through the configured schedules, return z_K with the full trace. The data
// prox is closed-form when `op` is diagonalizable and falls back to CG
// otherwise. Deterministic given cfg.seed.
RunResult flow_admm_run(const LinearOp& op, const Tensor& y, const FlowPrior& prior, const SolverConfig& cfg,
                        const MetricFn& metric = {});

// PnP-Flow forward-backward baseline:
//   z+ = x - tau ∇F_y(x);  x+ = (1/N) sum_i D_t(t z+ + (1-t) eps_i).
// tau >= 0 here (a zero step makes the iteration inert). The N_k-averaged
// denoising reuses the Monte Carlo mean operator.
RunResult pnp_flow_run(const LinearOp& op, const Tensor& y, const FlowPrior& prior, const SolverConfig& cfg,
                       const MetricFn& metric = {});

// Proposition 1 admissibility threshold tau > xi / ((1 + xi - 2 xi^2) mu).
// Throws AssumptionError when xi >= 1, the denominator is nonpositive, or
// mu <= 0 (the proposition's hypotheses do not hold).
double prop1_tau_lower_bound(double xi, double mu_strong);

// Spectral radius of the linear part of the fixed-t FlowADMM map
// (z,u) -> (z,u) for a Gaussian prior and a diagonalizable operator with the
// exact mean operator. All three update maps are diagonal in the shared
// P-basis, so the map splits into per-coefficient 2x2 blocks; the block is
// rank one and its radius is |a c + (1-a)(1-c)| with a = t m_i and
// c = 1/(1 + tau |lambda_i|^2).
double affine_admm_spectral_radius(const GaussianPrior& prior, const DiagonalizableOp& op, double tau, double t);

struct AffineFixedPoint {
  Tensor z;
  Tensor u;
};

// Closed-form fixed point of the fixed-t affine FlowADMM iteration.
AffineFixedPoint affine_admm_fixed_point(const GaussianPrior& prior, const DiagonalizableOp& op, double tau,
                                         double t, const Tensor& y);

struct Prop2Report {
  double gap_z = 0.0;  // ||z_K - z*(t_max)||
  double gap_u = 0.0;
  Tensor z_star;
  Tensor u_star;
  std::vector<double> gap_curve;  // ||z_k - z*|| per iteration
};

// Runs the non-stationary iteration with times from `schedule` (clamped to
// [0, t_max]) and the exact Gaussian estimator, and reports the terminal gap
// to the fixed point of the limiting operator. Report only; no pass/fail.
Prop2Report prop2_schedule_check(const GaussianPrior& prior, const DiagonalizableOp& op, double tau, double t_max,
                                 const std::function<double(std::size_t)>& schedule, std::size_t iterations,
                                 const Tensor& y);

}  // namespace flowadmm
