#include "flowadmm/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flowadmm/io.hpp"

namespace flowadmm {

void RunTrace::write_csv(const std::filesystem::path& path) const {
  std::ostringstream os;
  os << "k,t_k,N_k,primal_residual,dz,u_norm,psnr\n";
  for (const IterationRecord& r : records) {
    os << r.k << "," << format_double(r.t_k) << "," << r.n_k << "," << format_double(r.primal_residual) << ","
       << format_double(r.dz) << "," << format_double(r.u_norm) << ",";
    if (std::isnan(r.psnr)) {
      os << "";
    } else {
      os << format_double(r.psnr);
    }
    os << "\n";
  }
  write_text_file(path, os.str());
}

AdmmState flow_admm_step(const AdmmState& state, const ProxCallable& prox, const DenoiseCallable& denoise,
                         double t_k, std::size_t n_k) {
  AdmmState next;
  next.x = prox(state.z - state.u);
  next.z = denoise(next.x + state.u, t_k, n_k);
  next.u = state.u + (next.x - next.z);
  next.iteration = state.iteration + 1;
  return next;
}

namespace {

// Iterate norm guard; the theory assumes bounded iterates but prescribes no
// check, so blow-ups surface as an explicit error instead of NaN soup.
void check_iterate(const AdmmState& s, double scale, std::size_t k) {
  const double bound = 1e8 * (1.0 + scale);
  if (!s.x.all_finite() || !s.z.all_finite() || !s.u.all_finite() || norm2(s.x) > bound || norm2(s.z) > bound ||
      norm2(s.u) > bound) {
    throw DivergenceError("solver diverged at iteration " + std::to_string(k), k);
  }
}

ProxCallable make_prox(const LinearOp& op, const Tensor& y, double tau) {
  const auto* diag = dynamic_cast<const DiagonalizableOp*>(&op);
  if (diag != nullptr) {
    return [diag, y, tau](const Tensor& v) { return diag->prox_data(v, y, tau); };
  }
  return [&op, y, tau](const Tensor& v) { return prox_data_cg(op, v, y, tau, 1e-10, 1000).x; };
}

void record_iteration(RunTrace& trace, std::size_t k, double t_k, std::size_t n_k, const AdmmState& next,
                      const Tensor& z_prev, const MetricFn& metric) {
  IterationRecord rec;
  rec.k = k;
  rec.t_k = t_k;
  rec.n_k = n_k;
  rec.primal_residual = l2_distance(next.x, next.z);
  rec.dz = l2_distance(next.z, z_prev);
  rec.u_norm = norm2(next.u);
  if (metric) rec.psnr = metric(next.z);
  trace.records.push_back(rec);
}

}  // namespace

RunResult flow_admm_run(const LinearOp& op, const Tensor& y, const FlowPrior& prior, const SolverConfig& cfg,
                        const MetricFn& metric) {
  if (!(cfg.tau > 0.0)) throw ParameterError("flow_admm_run: tau must be > 0");
  const std::size_t total_iters = cfg.iterations();
  SeededRng rng(cfg.seed);

  AdmmState state;
  state.x = op.adjoint(y);
  state.z = state.x;
  state.u = Tensor::zeros(state.x.shape());
  const double guard_scale = norm2(state.x);

  const ProxCallable prox = make_prox(op, y, cfg.tau);
  const DenoiseCallable denoise = [&prior, &cfg, &rng](const Tensor& v, double t, std::size_t n) {
    return mean_denoise(prior, t, v, n, cfg.estimator, rng);
  };

  RunResult result;
  for (std::size_t k = 0; k < total_iters; ++k) {
    const double t_k = cfg.times.eval(k);
    const std::size_t n_k = cfg.samples.eval(k, total_iters);
    const Tensor z_prev = state.z;
    state = flow_admm_step(state, prox, denoise, t_k, n_k);
    check_iterate(state, guard_scale, k);
    result.trace.total_denoiser_evals +=
        cfg.estimator.mode == EstimatorConfig::Mode::monte_carlo ? n_k : std::size_t{1};
    record_iteration(result.trace, k, t_k, n_k, state, z_prev, metric);
    if (cfg.snapshot_every > 0 && (k + 1) % cfg.snapshot_every == 0) {
      result.trace.snapshots.push_back(Snapshot{k, state});
    }
  }
  result.reconstruction = state.z;
  result.final_state = std::move(state);
  return result;
}

RunResult pnp_flow_run(const LinearOp& op, const Tensor& y, const FlowPrior& prior, const SolverConfig& cfg,
                       const MetricFn& metric) {
  if (!(cfg.tau >= 0.0)) throw ParameterError("pnp_flow_run: tau must be >= 0");
  const std::size_t total_iters = cfg.iterations();
  SeededRng rng(cfg.seed);

  Tensor x = op.adjoint(y);
  const double guard_scale = norm2(x);

  RunResult result;
  for (std::size_t k = 0; k < total_iters; ++k) {
    const double t_k = cfg.times.eval(k);
    const std::size_t n_k = cfg.samples.eval(k, total_iters);

    // Gradient step on F_y(x) = (1/2)||Ax - y||^2.
    Tensor grad = op.adjoint(op.apply(x) - y);
    Tensor z = x;
    for (std::size_t i = 0; i < z.size(); ++i) z[i] -= cfg.tau * grad[i];

    Tensor x_next = mean_denoise(prior, t_k, z, n_k, cfg.estimator, rng);

    IterationRecord rec;
    rec.k = k;
    rec.t_k = t_k;
    rec.n_k = n_k;
    rec.primal_residual = l2_distance(x_next, z);  // size of the denoiser correction
    rec.dz = l2_distance(x_next, x);
    rec.u_norm = 0.0;
    if (metric) rec.psnr = metric(x_next);
    result.trace.records.push_back(rec);
    result.trace.total_denoiser_evals +=
        cfg.estimator.mode == EstimatorConfig::Mode::monte_carlo ? n_k : std::size_t{1};

    x = std::move(x_next);
    if (!x.all_finite() || norm2(x) > 1e8 * (1.0 + guard_scale)) {
      throw DivergenceError("pnp_flow_run diverged at iteration " + std::to_string(k) +
                                " (iterate norm " + std::to_string(norm2(x)) + ")",
                            k);
    }
    if (cfg.snapshot_every > 0 && (k + 1) % cfg.snapshot_every == 0) {
      result.trace.snapshots.push_back(Snapshot{k, AdmmState{x, x, Tensor::zeros(x.shape()), k + 1}});
    }
  }
  result.reconstruction = x;
  result.final_state = AdmmState{x, x, Tensor::zeros(x.shape()), total_iters};
  return result;
}

double prop1_tau_lower_bound(double xi, double mu_strong) {
  if (!(xi >= 0.0)) throw ParameterError("prop1_tau_lower_bound: xi must be >= 0");
  if (xi >= 1.0) throw AssumptionError("Prop. 1 hypotheses unmet: xi >= 1");
  const double denom = 1.0 + xi - 2.0 * xi * xi;
  if (!(denom > 0.0)) throw AssumptionError("Prop. 1 hypotheses unmet: 1 + xi - 2 xi^2 <= 0");
  if (!(mu_strong > 0.0)) throw AssumptionError("Prop. 1 hypotheses unmet: F_y is not strongly convex (mu <= 0)");
  return xi / (denom * mu_strong);
}

namespace {

// a_i = t * m_i; the linear factor of the exact Gaussian mean operator.
// t = 1 gives the identity operator (a = 1) regardless of the variance.
double mean_op_slope(double variance, double t) {
  if (t == 1.0) return 1.0;
  return t * gaussian_shrink_factor(variance, t);
}

void check_diagonal_compat(const GaussianPrior& prior, const DiagonalizableOp& op) {
  if (numel(op.input_shape()) != prior.mean.size()) {
    throw InvalidShapeError("prior/operator dimension mismatch");
  }
  if (!prior.isotropic() && op.basis() != DiagonalizableOp::Basis::pixel) {
    throw UnsupportedError("prior covariance is not diagonal in the operator's P-basis");
  }
}

}  // namespace

double affine_admm_spectral_radius(const GaussianPrior& prior, const DiagonalizableOp& op, double tau, double t) {
  if (!(tau > 0.0)) throw ParameterError("affine_admm_spectral_radius: tau must be > 0");
  if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("affine_admm_spectral_radius: t outside [0,1]");
  check_diagonal_compat(prior, op);
  const std::vector<double> s2 = op.spectrum_sq_magnitudes();
  double radius = 0.0;
  for (std::size_t i = 0; i < s2.size(); ++i) {
    const double a = mean_op_slope(prior.variance_at(i), t);
    const double c = 1.0 / (1.0 + tau * s2[i]);
    radius = std::max(radius, std::fabs(a * c + (1.0 - a) * (1.0 - c)));
  }
  return radius;
}

AffineFixedPoint affine_admm_fixed_point(const GaussianPrior& prior, const DiagonalizableOp& op, double tau,
                                         double t, const Tensor& y) {
  if (!(tau > 0.0)) throw ParameterError("affine_admm_fixed_point: tau must be > 0");
  check_diagonal_compat(prior, op);
  const std::vector<double> s2 = op.spectrum_sq_magnitudes();
  const CVec mu_hat = op.analysis(prior.mean);

  // q = conj(lambda) (Q y) embedded in input coefficient space == P (Aᵀ y).
  const CVec q = op.analysis(op.adjoint(y));

  CVec z_hat(s2.size());
  CVec u_hat(s2.size());
  for (std::size_t i = 0; i < s2.size(); ++i) {
    const double a = mean_op_slope(prior.variance_at(i), t);
    const double denom = 1.0 - a + a * tau * s2[i];
    if (std::fabs(denom) < 1e-14) {
      throw UnsupportedError("affine_admm_fixed_point: fixed point not unique (1 - a + a tau s == 0)");
    }
    z_hat[i] = ((1.0 - a) * mu_hat[i] + a * tau * q[i]) / denom;
    u_hat[i] = tau * (q[i] - s2[i] * z_hat[i]);
  }
  return AffineFixedPoint{op.synthesis(z_hat), op.synthesis(u_hat)};
}

Prop2Report prop2_schedule_check(const GaussianPrior& prior, const DiagonalizableOp& op, double tau, double t_max,
                                 const std::function<double(std::size_t)>& schedule, std::size_t iterations,
                                 const Tensor& y) {
  if (!(t_max >= 0.0 && t_max < 1.0)) throw ParameterError("prop2_schedule_check: t_max must be in [0,1)");
  const AffineFixedPoint star = affine_admm_fixed_point(prior, op, tau, t_max, y);

  AdmmState state;
  state.x = op.adjoint(y);
  state.z = state.x;
  state.u = Tensor::zeros(state.x.shape());

  const ProxCallable prox = [&op, &y, tau](const Tensor& v) { return op.prox_data(v, y, tau); };
  const DenoiseCallable denoise = [&prior](const Tensor& v, double t, std::size_t) {
    return mean_denoise_exact_gaussian(prior, t, v);
  };

  Prop2Report report;
  report.gap_curve.reserve(iterations);
  for (std::size_t k = 0; k < iterations; ++k) {
    const double t_k = std::clamp(schedule(k), 0.0, t_max);
    state = flow_admm_step(state, prox, denoise, t_k, 0);
    report.gap_curve.push_back(l2_distance(state.z, star.z));
  }
  report.gap_z = l2_distance(state.z, star.z);
  report.gap_u = l2_distance(state.u, star.u);
  report.z_star = star.z;
  report.u_star = star.u;
  return report;
}

}  // namespace flowadmm
