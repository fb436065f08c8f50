#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "flowadmm/solvers.hpp"

#include "oracles.hpp"

using namespace flowadmm;

namespace {

GaussianPrior unit_gaussian(std::size_t dim) { return GaussianPrior(Tensor::zeros({dim}), {1.0}); }

// Linear factor of the exact Gaussian mean operator, a = t m(t).
double slope_a(double variance, double t) { return t * gaussian_shrink_factor(variance, t); }

SolverConfig fixed_t_config(double tau, double t, std::size_t iterations) {
  SolverConfig cfg;
  cfg.tau = tau;
  cfg.times = TimeSchedule(t, t, 1.0, iterations);
  cfg.samples = SampleSchedule::constant(1);
  cfg.estimator.mode = EstimatorConfig::Mode::exact_gaussian;
  return cfg;
}

}  // namespace

TEST_CASE("one ADMM step matches the hand-rolled triple update") {
  SeededRng rng(200);
  const double tau = 0.7;
  const Tensor y = rng.standard_normal({4});
  const auto prox = [&](const Tensor& v) {
    Tensor out = Tensor::zeros({4});
    for (std::size_t i = 0; i < 4; ++i) out[i] = (v[i] + tau * y[i]) / (1.0 + tau);
    return out;
  };
  const auto denoise = [](const Tensor& v, double t, std::size_t) {
    Tensor out = v;
    out *= 0.8 * t;
    return out;
  };

  AdmmState state;
  state.x = rng.standard_normal({4});
  state.z = rng.standard_normal({4});
  state.u = rng.standard_normal({4});

  const AdmmState next = flow_admm_step(state, prox, denoise, 0.6, 3);

  // independent three-line rewrite
  const Tensor x_expect = prox(state.z - state.u);
  const Tensor z_expect = denoise(x_expect + state.u, 0.6, 3);
  const Tensor u_expect = state.u + (x_expect - z_expect);
  CHECK(next.x.values() == x_expect.values());
  CHECK(next.z.values() == z_expect.values());
  CHECK(next.u.values() == u_expect.values());
  CHECK(next.iteration == state.iteration + 1);
}

TEST_CASE("identity denoiser zeroes the dual variable after one step") {
  SeededRng rng(201);
  AdmmState state;
  state.x = rng.standard_normal({5});
  state.z = rng.standard_normal({5});
  state.u = rng.standard_normal({5});
  const auto prox = [](const Tensor& v) { return v; };
  const auto denoise = [](const Tensor& v, double, std::size_t) { return v; };
  const AdmmState next = flow_admm_step(state, prox, denoise, 0.9, 1);
  for (std::size_t i = 0; i < 5; ++i) CHECK(next.u[i] == 0.0);
}

TEST_CASE("zero measurement, zero prior mean, zero state stays zero") {
  const auto op = DiagonalizableOp::make_identity({3});
  const FlowPrior prior = unit_gaussian(3);
  const Tensor y = Tensor::zeros({3});
  const RunResult res = flow_admm_run(op, y, prior, fixed_t_config(1.0, 0.5, 10));
  CHECK(norm2(res.reconstruction) == 0.0);
}

TEST_CASE("fixed-t gaussian identity run reaches the analytic fixed point") {
  const auto op = DiagonalizableOp::make_identity({1});
  const GaussianPrior prior = unit_gaussian(1);
  const FlowPrior fp = prior;
  const double t = 0.7, tau = 1.3;
  const Tensor y({1}, {2.0});
  const RunResult res = flow_admm_run(op, y, fp, fixed_t_config(tau, t, 200));
  const double a = slope_a(1.0, t);
  const double z_star = 2.0 * a * tau / (a * tau + 1.0 - a);
  CHECK(std::fabs(res.reconstruction[0] - z_star) <= 1e-8);

  // closed-form fixed point helper agrees, including the dual variable
  const AffineFixedPoint star = affine_admm_fixed_point(prior, op, tau, t, y);
  CHECK(star.z[0] == doctest::Approx(z_star).epsilon(1e-12));
  CHECK(star.u[0] == doctest::Approx(z_star * (1.0 - a) / a).epsilon(1e-12));
  CHECK(std::fabs(res.final_state.u[0] - star.u[0]) <= 1e-8);
}

TEST_CASE("dual-update identity is assertable from snapshots") {
  const auto op = DiagonalizableOp::make_identity({4});
  const FlowPrior prior = unit_gaussian(4);
  SeededRng rng(202);
  const Tensor y = rng.standard_normal({4});
  SolverConfig cfg = fixed_t_config(0.9, 0.6, 8);
  cfg.estimator.mode = EstimatorConfig::Mode::monte_carlo;
  cfg.samples = SampleSchedule::constant(3);
  cfg.snapshot_every = 1;
  const RunResult res = flow_admm_run(op, y, prior, cfg);
  REQUIRE(res.trace.snapshots.size() == 8);
  for (std::size_t k = 1; k < res.trace.snapshots.size(); ++k) {
    const AdmmState& prev = res.trace.snapshots[k - 1].state;
    const AdmmState& cur = res.trace.snapshots[k].state;
    const Tensor expect = prev.u + (cur.x - cur.z);
    CHECK(cur.u.values() == expect.values());
  }
}

TEST_CASE("large tau pushes the data prox toward the measurement") {
  SeededRng rng(203);
  const Tensor y = rng.standard_normal({4});
  const auto op = DiagonalizableOp::make_identity({4});
  const Tensor v = rng.standard_normal({4});
  const Tensor p = op.prox_data(v, y, 1e12);
  CHECK(l2_distance(p, y) <= 1e-9);
}

TEST_CASE("runs are bitwise reproducible under a fixed seed") {
  const auto op = DiagonalizableOp::make_identity({6});
  const FlowPrior prior = unit_gaussian(6);
  SeededRng rng(204);
  const Tensor y = rng.standard_normal({6});
  SolverConfig cfg = fixed_t_config(1.0, 0.8, 1);
  cfg.estimator.mode = EstimatorConfig::Mode::monte_carlo;
  cfg.samples = SampleSchedule::constant(1);
  cfg.seed = 42;
  const RunResult a = flow_admm_run(op, y, prior, cfg);
  const RunResult b = flow_admm_run(op, y, prior, cfg);
  CHECK(a.reconstruction.values() == b.reconstruction.values());
}

TEST_CASE("MC solver tracks the exact solver within propagated standard error") {
  const auto op = DiagonalizableOp::make_identity({1});
  const GaussianPrior prior = unit_gaussian(1);
  const FlowPrior fp = prior;
  const Tensor y({1}, {1.5});
  const double t = 0.7, tau = 1.0;
  const std::size_t iters = 60, n = 4096;

  SolverConfig exact_cfg = fixed_t_config(tau, t, iters);
  const RunResult exact = flow_admm_run(op, y, fp, exact_cfg);

  SolverConfig mc_cfg = exact_cfg;
  mc_cfg.estimator.mode = EstimatorConfig::Mode::monte_carlo;
  mc_cfg.samples = SampleSchedule::constant(n);
  mc_cfg.seed = 7;
  const RunResult mc = flow_admm_run(op, y, fp, mc_cfg);

  // per-iteration estimator std m(1-t)/sqrt(N), accumulated through the
  // contraction with factor rho per step
  const double m = gaussian_shrink_factor(1.0, t);
  const double per_iter = m * (1.0 - t) / std::sqrt(static_cast<double>(n));
  const double rho = affine_admm_spectral_radius(prior, op, tau, t);
  const double propagated = per_iter / std::sqrt(1.0 - rho * rho);
  CHECK(l2_distance(mc.reconstruction, exact.reconstruction) <= 10.0 * propagated);
}

TEST_CASE("budget accounting matches the sample schedule") {
  const auto op = DiagonalizableOp::make_identity({4});
  const FlowPrior prior = unit_gaussian(4);
  SeededRng rng(205);
  const Tensor y = rng.standard_normal({4});
  SolverConfig cfg;
  cfg.tau = 1.0;
  cfg.times = TimeSchedule(0.5, 0.95, 1.0, 100);
  cfg.samples = SampleSchedule::three_phase(1, 1, 41, 0.5, 0.9);
  cfg.estimator.mode = EstimatorConfig::Mode::monte_carlo;
  const RunResult res = flow_admm_run(op, y, prior, cfg);
  CHECK(res.trace.total_denoiser_evals == 500);
  CHECK(res.trace.records.size() == 100);
}

TEST_CASE("prop 1 tau lower bound") {
  CHECK(prop1_tau_lower_bound(0.5, 1.0) == doctest::Approx(0.5));
  CHECK(prop1_tau_lower_bound(0.0, 2.0) == 0.0);
  CHECK_THROWS_AS(prop1_tau_lower_bound(1.0, 1.0), AssumptionError);
  CHECK_THROWS_AS(prop1_tau_lower_bound(0.9, 1.0), AssumptionError);  // denominator < 0
  CHECK_THROWS_AS(prop1_tau_lower_bound(0.5, 0.0), AssumptionError);
}

TEST_CASE("spectral radius matches a dense 2x2 probe of the real step") {
  const GaussianPrior prior = unit_gaussian(1);
  const auto op = DiagonalizableOp::make_identity({1});
  const Tensor y({1}, {0.8});

  for (double t : {0.3, 0.7, 1.0}) {
    for (double tau : {0.4, 1.0, 3.0}) {
      // probe the affine map (z,u) -> (z,u) column by column
      const auto step_zu = [&](double z, double u) {
        AdmmState s;
        s.x = Tensor::zeros({1});
        s.z = Tensor({1}, {z});
        s.u = Tensor({1}, {u});
        const auto prox = [&](const Tensor& v) { return op.prox_data(v, y, tau); };
        const auto denoise = [&](const Tensor& v, double tt, std::size_t) {
          return mean_denoise_exact_gaussian(prior, tt, v);
        };
        const AdmmState n = flow_admm_step(s, prox, denoise, t, 0);
        return std::pair<double, double>(n.z[0], n.u[0]);
      };
      const auto [z0, u0] = step_zu(0.0, 0.0);
      const auto [za, ua] = step_zu(1.0, 0.0);
      const auto [zb, ub] = step_zu(0.0, 1.0);
      const double oracle = oracles::radius_2x2(za - z0, zb - z0, ua - u0, ub - u0);
      const double got = affine_admm_spectral_radius(prior, op, tau, t);
      CHECK(std::fabs(got - oracle) <= 1e-8);
    }
  }
}

TEST_CASE("radius is below one above the prop 1 bound and matches observed rates") {
  const GaussianPrior prior = unit_gaussian(1);
  const FlowPrior fp = prior;
  const auto op = DiagonalizableOp::make_identity({1});
  const Tensor y({1}, {1.0});
  const double t = 0.7;
  const double xi = lemma1_bound(t, gaussian_velocity_lipschitz(prior, t));
  const double bound = prop1_tau_lower_bound(xi, op.min_sq_magnitude());

  for (double factor : {1.01, 1.5, 2.0, 4.0, 16.0}) {
    const double tau = bound * factor;
    const double rho = affine_admm_spectral_radius(prior, op, tau, t);
    CHECK(rho < 1.0);

    // observed geometric rate of ||z_k - z*||
    const AffineFixedPoint star = affine_admm_fixed_point(prior, op, tau, t, y);
    SolverConfig cfg = fixed_t_config(tau, t, 40);
    cfg.snapshot_every = 1;
    const RunResult res = flow_admm_run(op, y, fp, cfg);
    // skip the first step (transient), stop before the fp noise floor
    std::vector<double> gaps;
    for (const Snapshot& s : res.trace.snapshots) gaps.push_back(l2_distance(s.state.z, star.z));
    std::size_t k0 = 1, k1 = gaps.size() - 1;
    while (k1 > k0 + 1 && gaps[k1] < 1e-12) --k1;
    const double rate = std::pow(gaps[k1] / gaps[k0], 1.0 / static_cast<double>(k1 - k0));
    CHECK(std::fabs(rate - rho) <= 0.05);
  }
}

TEST_CASE("permuting coordinates leaves the radius unchanged") {
  // isotropic prior: every coordinate contributes the same block
  const GaussianPrior prior = unit_gaussian(4);
  const auto op = DiagonalizableOp::make_identity({4});
  const double r4 = affine_admm_spectral_radius(prior, op, 1.2, 0.6);
  const GaussianPrior prior1 = unit_gaussian(1);
  const auto op1 = DiagonalizableOp::make_identity({1});
  CHECK(r4 == affine_admm_spectral_radius(prior1, op1, 1.2, 0.6));
}

TEST_CASE("anisotropic prior with a fourier operator is unsupported") {
  const GaussianPrior prior(Tensor::zeros({8, 8}), std::vector<double>(64, 1.0));
  const auto blur = DiagonalizableOp::make_gaussian_blur({8, 8}, 5, 1.0);
  CHECK_THROWS_AS(affine_admm_spectral_radius(prior, blur, 1.0, 0.5), UnsupportedError);
  // isotropic prior is fine in any basis
  const GaussianPrior iso_img(Tensor::zeros({8, 8}), {1.0});
  CHECK_NOTHROW(affine_admm_spectral_radius(iso_img, blur, 1.0, 0.5));
}

TEST_CASE("prop 2 with a constant schedule reduces to the fixed-t run") {
  const GaussianPrior prior = unit_gaussian(1);
  const auto op = DiagonalizableOp::make_identity({1});
  const Tensor y({1}, {1.0});
  const double t_max = 0.9, tau = 1.0;
  const Prop2Report report =
      prop2_schedule_check(prior, op, tau, t_max, [&](std::size_t) { return t_max; }, 200, y);
  CHECK(report.gap_z <= 1e-10);
  CHECK(report.gap_u <= 1e-10);
}

TEST_CASE("prop 2 geometric schedule converges to the limiting fixed point") {
  const GaussianPrior prior = unit_gaussian(1);
  const auto op = DiagonalizableOp::make_identity({1});
  const Tensor y({1}, {1.0});
  const double t_max = 0.9, tau = 1.0;
  const auto schedule = [&](std::size_t k) { return t_max - 0.3 * std::pow(0.9, static_cast<double>(k)); };
  const Prop2Report report = prop2_schedule_check(prior, op, tau, t_max, schedule, 400, y);
  CHECK(report.gap_z <= 1e-6);
  CHECK(report.gap_u <= 1e-6);
}

TEST_CASE("prop 2 with a non-summable schedule decays more slowly") {
  const GaussianPrior prior = unit_gaussian(1);
  const auto op = DiagonalizableOp::make_identity({1});
  const Tensor y({1}, {1.0});
  const double t_max = 0.9, tau = 1.0;
  const auto slow = [&](std::size_t k) { return t_max - 1.0 / static_cast<double>(k + 2); };
  const auto fast = [&](std::size_t k) { return t_max - 0.3 * std::pow(0.9, static_cast<double>(k)); };
  const Prop2Report r_slow = prop2_schedule_check(prior, op, tau, t_max, slow, 150, y);
  const Prop2Report r_fast = prop2_schedule_check(prior, op, tau, t_max, fast, 150, y);
  // measurement only: the harmonic schedule is still far from the limit
  CHECK(r_slow.gap_z > r_fast.gap_z);
  CHECK(std::isfinite(r_slow.gap_z));
}

TEST_CASE("pnp-flow with zero step and t = 1 is inert") {
  const auto op = DiagonalizableOp::make_identity({4});
  const FlowPrior prior = unit_gaussian(4);
  SeededRng rng(206);
  const Tensor y = rng.standard_normal({4});
  SolverConfig cfg;
  cfg.tau = 0.0;
  cfg.times = TimeSchedule(1.0, 1.0, 1.0, 20);
  cfg.samples = SampleSchedule::constant(1);
  cfg.estimator.mode = EstimatorConfig::Mode::monte_carlo;
  const RunResult res = pnp_flow_run(op, y, prior, cfg);
  CHECK(res.reconstruction.values() == op.adjoint(y).values());  // x_K == x_0
}

TEST_CASE("pnp-flow affine limit matches the scalar fixed point") {
  const auto op = DiagonalizableOp::make_identity({1});
  const GaussianPrior prior = unit_gaussian(1);
  const FlowPrior fp = prior;
  const Tensor y({1}, {1.2});
  const double t = 0.7, tau = 0.8;
  SolverConfig cfg = fixed_t_config(tau, t, 300);
  const RunResult res = pnp_flow_run(op, y, fp, cfg);
  // x+ = a((1-tau) x + tau y): fixed point a tau y / (1 - a(1-tau))
  const double a = slope_a(1.0, t);
  const double x_star = a * tau * 1.2 / (1.0 - a * (1.0 - tau));
  CHECK(std::fabs(res.reconstruction[0] - x_star) <= 1e-10);
}

TEST_CASE("pnp-flow records the same budget bookkeeping") {
  const auto op = DiagonalizableOp::make_identity({4});
  const FlowPrior prior = unit_gaussian(4);
  SeededRng rng(207);
  const Tensor y = rng.standard_normal({4});
  SolverConfig cfg;
  cfg.tau = 0.5;
  cfg.times = TimeSchedule(0.5, 0.95, 1.0, 100);
  cfg.samples = SampleSchedule::three_phase(1, 1, 41, 0.5, 0.9);
  cfg.estimator.mode = EstimatorConfig::Mode::monte_carlo;
  const RunResult res = pnp_flow_run(op, y, prior, cfg);
  CHECK(res.trace.total_denoiser_evals == 500);
}

TEST_CASE("pnp-flow divergence raises with the iteration index") {
  const auto op = DiagonalizableOp::make_identity({1});
  const FlowPrior prior = unit_gaussian(1);
  const Tensor y({1}, {1.0});
  SolverConfig cfg = fixed_t_config(3.5, 0.9, 200);  // a(1-tau) < -1: oscillating blow-up
  try {
    pnp_flow_run(op, y, prior, cfg);
    CHECK(false);
  } catch (const DivergenceError& e) {
    CHECK(e.iteration > 0);
    CHECK(e.iteration < 200);
  }
}

TEST_CASE("flow-admm divergence guard catches exploding priors") {
  MlpVelocity net(2, 2);
  net.params()[net.b2_offset()] = 1e13;  // denoiser output far beyond the guard
  net.params()[net.b2_offset() + 1] = 1e13;
  const FlowPrior prior = std::move(net);
  const auto op = DiagonalizableOp::make_identity({2});
  const Tensor y({2}, {0.1, 0.2});
  SolverConfig cfg;
  cfg.tau = 1.0;
  cfg.times = TimeSchedule(0.5, 0.9, 1.0, 10);
  cfg.samples = SampleSchedule::constant(1);
  cfg.estimator.mode = EstimatorConfig::Mode::monte_carlo;
  CHECK_THROWS_AS(flow_admm_run(op, y, prior, cfg), DivergenceError);
}

TEST_CASE("invalid tau rejected") {
  const auto op = DiagonalizableOp::make_identity({2});
  const FlowPrior prior = unit_gaussian(2);
  const Tensor y({2}, {0.0, 0.0});
  CHECK_THROWS_AS(flow_admm_run(op, y, prior, fixed_t_config(0.0, 0.5, 5)), ParameterError);
  CHECK_THROWS_AS(pnp_flow_run(op, y, prior, fixed_t_config(-1.0, 0.5, 5)), ParameterError);
}

TEST_CASE("trace csv export") {
  const auto op = DiagonalizableOp::make_identity({4});
  const FlowPrior prior = unit_gaussian(4);
  SeededRng rng(208);
  const Tensor y = rng.standard_normal({4});
  SolverConfig cfg = fixed_t_config(1.0, 0.5, 3);
  const Tensor truth = rng.standard_normal({4});
  const RunResult res =
      flow_admm_run(op, y, prior, cfg, [&](const Tensor& z) { return -10.0 * std::log10(mse(z, truth)); });
  const auto path = std::filesystem::temp_directory_path() / "flowadmm_trace_test.csv";
  res.trace.write_csv(path);
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  const std::string text = ss.str();
  CHECK(text.rfind("k,t_k,N_k,primal_residual,dz,u_norm,psnr\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);  // header + 3 rows
  std::filesystem::remove(path);
}
