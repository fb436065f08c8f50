#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "flowadmm/rng.hpp"
#include "flowadmm/tensor.hpp"

namespace flowadmm {

// Gaussian prior with diagonal covariance; variance has one entry (isotropic)
// or one per coordinate. Zero variance is allowed and gives the degenerate
// point-mass prior, whose denoiser is constant.
struct GaussianPrior {
  Tensor mean;
  std::vector<double> variance;

  GaussianPrior(Tensor mean_, std::vector<double> variance_);
  double variance_at(std::size_t i) const { return variance.size() == 1 ? variance[0] : variance[i]; }
  bool isotropic() const { return variance.size() == 1; }
};

// Mixture of diagonal Gaussians. Weights sum to one; variances strictly
// positive (responsibility computation needs proper densities).
struct GmmPrior {
  struct Component {
    Tensor mean;
    std::vector<double> variance;
    double variance_at(std::size_t i) const { return variance.size() == 1 ? variance[0] : variance[i]; }
  };
  std::vector<double> weights;
  std::vector<Component> components;

  GmmPrior(std::vector<double> weights_, std::vector<Component> components_);
  const Shape& shape() const { return components.front().mean.shape(); }
};

// Two-layer velocity network v(x, t): input [x; t], tanh hidden layer,
// linear output of x's dimension. Parameters live in one flat vector
// (W1 row-major, b1, W2 row-major, b2) so training, gradient checks, and
// serialization all see the same layout.
class MlpVelocity {
 public:
  MlpVelocity(std::size_t dim, std::size_t hidden);  // zero-initialized

  static MlpVelocity random_init(std::size_t dim, std::size_t hidden, SeededRng& rng);

  std::size_t dim() const { return dim_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  Tensor forward(const Tensor& x, double t) const;

  static constexpr const char* kActivation = "tanh";

 private:
  std::size_t dim_;
  std::size_t hidden_;
  std::vector<double> params_;

 public:
  // Flat-layout offsets.
  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const { return hidden_ * (dim_ + 1); }
  std::size_t w2_offset() const { return b1_offset() + hidden_; }
  std::size_t b2_offset() const { return w2_offset() + dim_ * hidden_; }
};

using FlowPrior = std::variant<GaussianPrior, GmmPrior, MlpVelocity>;

bool is_analytic(const FlowPrior& prior);
const Shape& prior_shape(const FlowPrior& prior);

// MMSE denoiser D_t. For analytic priors this is the exact posterior mean
// E[x1 | x_t] under x_t = t x1 + (1-t) x0; for the network prior it is
// x_t + (1-t) v(x_t, t). At t = 1 every denoiser is the identity.
Tensor denoiser_apply(const FlowPrior& prior, double t, const Tensor& xt);

// Velocity field: (D_t(x) - x)/(1-t) for analytic priors (t < 1), network
// forward for MlpVelocity.
Tensor velocity_apply(const FlowPrior& prior, double t, const Tensor& x);

// Exact draw from an analytic prior; MlpVelocity is not a sampler here.
Tensor sample_prior(const FlowPrior& prior, SeededRng& rng);

// Posterior component responsibilities of the mixture at noise level t.
std::vector<double> gmm_responsibilities(const GmmPrior& prior, double t, const Tensor& xt);

// Per-coordinate posterior shrink factor m(t) = t s2 / (t^2 s2 + (1-t)^2).
double gaussian_shrink_factor(double variance, double t);
// Closed-form spectral norm of the velocity Jacobian, max_i |m_i - 1|/(1-t).
double gaussian_velocity_lipschitz(const GaussianPrior& prior, double t);
// Exact Lipschitz constant of the residual R_t = S_t - I, max_i |t m_i - 1|.
double gaussian_residual_lipschitz(const GaussianPrior& prior, double t);

// ---- Flow-matching training ----

struct FlowBatch {
  std::vector<Tensor> x0;
  std::vector<Tensor> x1;
  std::vector<double> t;
  std::size_t size() const { return t.size(); }
};

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Mean over the batch of ||v(x_t, t) - (x1 - x0)||^2 with exact analytic
// parameter gradients (manual backprop through the two layers).
LossAndGrad flow_matching_loss_and_grad(const MlpVelocity& model, const FlowBatch& batch);

struct TrainConfig {
  std::size_t steps = 1000;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  std::size_t eval_batch_size = 512;
};

struct TrainResult {
  MlpVelocity model;
  // Loss on a fixed evaluation batch drawn up front: entry 0 is the initial
  // loss, entry k+1 the loss after SGD step k. Evaluating on a fixed batch
  // keeps the curve independent of per-step batch noise.
  std::vector<double> loss_curve;
};

TrainResult train_flow_matching(MlpVelocity model, const FlowPrior& data_prior, const TrainConfig& cfg,
                                SeededRng& rng);

// F64 parameter blob plus JSON sidecar {d, h, activation}; `base` gets the
// .f64 / .json extensions appended.
void save_mlp(const std::filesystem::path& base, const MlpVelocity& model);
MlpVelocity load_mlp(const std::filesystem::path& base);

}  // namespace flowadmm
