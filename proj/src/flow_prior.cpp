#include "flowadmm/flow_prior.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "flowadmm/io.hpp"

namespace flowadmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_t_range(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("t must lie in [0,1], got " + std::to_string(t));
}

}  // namespace

GaussianPrior::GaussianPrior(Tensor mean_, std::vector<double> variance_)
    : mean(std::move(mean_)), variance(std::move(variance_)) {
  if (variance.size() != 1 && variance.size() != mean.size()) {
    throw ParameterError("GaussianPrior: variance must be scalar or per-coordinate");
  }
  for (double v : variance) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("GaussianPrior: variance must be finite and >= 0");
  }
}

GmmPrior::GmmPrior(std::vector<double> weights_, std::vector<Component> components_)
    : weights(std::move(weights_)), components(std::move(components_)) {
  if (weights.empty() || weights.size() != components.size()) {
    throw ParameterError("GmmPrior: weights/components mismatch");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ParameterError("GmmPrior: weights must be positive");
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-12) throw ParameterError("GmmPrior: weights must sum to 1");
  const Shape& shape = components.front().mean.shape();
  for (const Component& c : components) {
    if (c.mean.shape() != shape) throw ParameterError("GmmPrior: component shapes differ");
    if (c.variance.size() != 1 && c.variance.size() != c.mean.size()) {
      throw ParameterError("GmmPrior: variance must be scalar or per-coordinate");
    }
    for (double v : c.variance) {
      if (!(v > 0.0)) throw ParameterError("GmmPrior: variances must be strictly positive");
    }
  }
}

MlpVelocity::MlpVelocity(std::size_t dim, std::size_t hidden) : dim_(dim), hidden_(hidden) {
  if (dim == 0 || hidden == 0) throw ParameterError("MlpVelocity: dim and hidden must be >= 1");
  params_.assign(hidden * (dim + 1) + hidden + dim * hidden + dim, 0.0);
}

MlpVelocity MlpVelocity::random_init(std::size_t dim, std::size_t hidden, SeededRng& rng) {
  MlpVelocity m(dim, hidden);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(dim + 1));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto& p = m.params_;
  for (std::size_t i = 0; i < hidden * (dim + 1); ++i) p[m.w1_offset() + i] = s1 * rng.next_normal();
  for (std::size_t i = 0; i < dim * hidden; ++i) p[m.w2_offset() + i] = s2 * rng.next_normal();
  return m;
}

Tensor MlpVelocity::forward(const Tensor& x, double t) const {
  if (x.size() != dim_) {
    throw InvalidShapeError("MlpVelocity: input has " + std::to_string(x.size()) + " entries, expected " +
                            std::to_string(dim_));
  }
  const double* w1 = params_.data() + w1_offset();
  const double* b1 = params_.data() + b1_offset();
  const double* w2 = params_.data() + w2_offset();
  const double* b2 = params_.data() + b2_offset();
  std::vector<double> h(hidden_);
  for (std::size_t j = 0; j < hidden_; ++j) {
    double acc = b1[j];
    const double* row = w1 + j * (dim_ + 1);
    for (std::size_t i = 0; i < dim_; ++i) acc += row[i] * x[i];
    acc += row[dim_] * t;
    h[j] = std::tanh(acc);
  }
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < dim_; ++i) {
    double acc = b2[i];
    const double* row = w2 + i * hidden_;
    for (std::size_t j = 0; j < hidden_; ++j) acc += row[j] * h[j];
    out[i] = acc;
  }
  return out;
}

bool is_analytic(const FlowPrior& prior) { return !std::holds_alternative<MlpVelocity>(prior); }

const Shape& prior_shape(const FlowPrior& prior) {
  if (const auto* g = std::get_if<GaussianPrior>(&prior)) return g->mean.shape();
  if (const auto* m = std::get_if<GmmPrior>(&prior)) return m->shape();
  throw UnsupportedError("prior_shape: network prior carries no tensor shape");
}

double gaussian_shrink_factor(double variance, double t) {
  const double denom = t * t * variance + (1.0 - t) * (1.0 - t);
  return t * variance / denom;
}

std::vector<double> gmm_responsibilities(const GmmPrior& prior, double t, const Tensor& xt) {
  check_t_range(t);
  const std::size_t n_comp = prior.components.size();
  std::vector<double> logp(n_comp);
  const double omt2 = (1.0 - t) * (1.0 - t);
  for (std::size_t k = 0; k < n_comp; ++k) {
    const auto& comp = prior.components[k];
    double acc = std::log(prior.weights[k]);
    for (std::size_t i = 0; i < xt.size(); ++i) {
      const double d = t * t * comp.variance_at(i) + omt2;
      const double r = xt[i] - t * comp.mean[i];
      acc -= 0.5 * (kLog2Pi + std::log(d) + r * r / d);
    }
    logp[k] = acc;
  }
  const double m = *std::max_element(logp.begin(), logp.end());
  double z = 0.0;
  std::vector<double> resp(n_comp);
  for (std::size_t k = 0; k < n_comp; ++k) {
    resp[k] = std::exp(logp[k] - m);
    z += resp[k];
  }
  for (double& r : resp) r /= z;
  return resp;
}

Tensor denoiser_apply(const FlowPrior& prior, double t, const Tensor& xt) {
  check_t_range(t);
  if (t == 1.0 && is_analytic(prior)) return xt;  // continuous limit: x_t = x1

  if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
    require_same_shape(xt, g->mean, "denoiser_apply");
    Tensor out = Tensor::zeros(xt.shape());
    for (std::size_t i = 0; i < xt.size(); ++i) {
      const double m = gaussian_shrink_factor(g->variance_at(i), t);
      out[i] = g->mean[i] + m * (xt[i] - t * g->mean[i]);
    }
    return out;
  }
  if (const auto* gmm = std::get_if<GmmPrior>(&prior)) {
    if (xt.shape() != gmm->shape()) throw InvalidShapeError("denoiser_apply: input shape mismatch");
    const std::vector<double> resp = gmm_responsibilities(*gmm, t, xt);
    Tensor out = Tensor::zeros(xt.shape());
    for (std::size_t k = 0; k < gmm->components.size(); ++k) {
      const auto& comp = gmm->components[k];
      const double r = resp[k];
      for (std::size_t i = 0; i < xt.size(); ++i) {
        const double m = gaussian_shrink_factor(comp.variance_at(i), t);
        out[i] += r * (comp.mean[i] + m * (xt[i] - t * comp.mean[i]));
      }
    }
    return out;
  }
  const auto& net = std::get<MlpVelocity>(prior);
  Tensor v = net.forward(xt, t);
  Tensor out = xt;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += (1.0 - t) * v[i];
  return out;
}

Tensor velocity_apply(const FlowPrior& prior, double t, const Tensor& x) {
  check_t_range(t);
  if (const auto* net = std::get_if<MlpVelocity>(&prior)) return net->forward(x, t);
  if (t >= 1.0) throw ParameterError("velocity_apply: analytic velocity needs t < 1");
  Tensor d = denoiser_apply(prior, t, x);
  d -= x;
  d *= 1.0 / (1.0 - t);
  return d;
}

Tensor sample_prior(const FlowPrior& prior, SeededRng& rng) {
  if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
    Tensor z = rng.standard_normal(g->mean.shape());
    Tensor out = g->mean;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::sqrt(g->variance_at(i)) * z[i];
    return out;
  }
  if (const auto* gmm = std::get_if<GmmPrior>(&prior)) {
    const double u = rng.next_uniform();
    double cum = 0.0;
    std::size_t pick = gmm->components.size() - 1;
    for (std::size_t k = 0; k < gmm->weights.size(); ++k) {
      cum += gmm->weights[k];
      if (u <= cum) {
        pick = k;
        break;
      }
    }
    const auto& comp = gmm->components[pick];
    Tensor z = rng.standard_normal(comp.mean.shape());
    Tensor out = comp.mean;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::sqrt(comp.variance_at(i)) * z[i];
    return out;
  }
  throw UnsupportedError("sample_prior: MlpVelocity defines a flow, not a sampler");
}

double gaussian_velocity_lipschitz(const GaussianPrior& prior, double t) {
  if (!(t >= 0.0 && t < 1.0)) throw ParameterError("gaussian_velocity_lipschitz: needs t in [0,1)");
  double worst = 0.0;
  for (std::size_t i = 0; i < prior.variance.size(); ++i) {
    const double m = gaussian_shrink_factor(prior.variance[i], t);
    worst = std::max(worst, std::fabs(m - 1.0) / (1.0 - t));
  }
  return worst;
}

double gaussian_residual_lipschitz(const GaussianPrior& prior, double t) {
  check_t_range(t);
  if (t == 1.0) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < prior.variance.size(); ++i) {
    const double m = gaussian_shrink_factor(prior.variance[i], t);
    worst = std::max(worst, std::fabs(t * m - 1.0));
  }
  return worst;
}

LossAndGrad flow_matching_loss_and_grad(const MlpVelocity& model, const FlowBatch& batch) {
  if (batch.size() == 0) throw ParameterError("flow_matching_loss_and_grad: empty batch");
  if (batch.x0.size() != batch.size() || batch.x1.size() != batch.size()) {
    throw ParameterError("flow_matching_loss_and_grad: ragged batch");
  }
  const std::size_t d = model.dim();
  const std::size_t h = model.hidden();
  const double* w1 = model.params().data() + model.w1_offset();
  const double* b1 = model.params().data() + model.b1_offset();
  const double* w2 = model.params().data() + model.w2_offset();
  const double* b2 = model.params().data() + model.b2_offset();

  LossAndGrad out;
  out.grad.assign(model.parameter_count(), 0.0);
  double* gw1 = out.grad.data() + model.w1_offset();
  double* gb1 = out.grad.data() + model.b1_offset();
  double* gw2 = out.grad.data() + model.w2_offset();
  double* gb2 = out.grad.data() + model.b2_offset();

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> a(d + 1), hact(h), err(d), dh(h);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Tensor& x0 = batch.x0[b];
    const Tensor& x1 = batch.x1[b];
    const double t = batch.t[b];
    if (x0.size() != d || x1.size() != d) throw InvalidShapeError("flow_matching_loss_and_grad: sample dim mismatch");
    if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("flow_matching_loss_and_grad: t outside [0,1]");

    for (std::size_t i = 0; i < d; ++i) a[i] = t * x1[i] + (1.0 - t) * x0[i];
    a[d] = t;

    for (std::size_t j = 0; j < h; ++j) {
      double acc = b1[j];
      const double* row = w1 + j * (d + 1);
      for (std::size_t i = 0; i <= d; ++i) acc += row[i] * a[i];
      hact[j] = std::tanh(acc);
    }
    for (std::size_t i = 0; i < d; ++i) {
      double acc = b2[i];
      const double* row = w2 + i * h;
      for (std::size_t j = 0; j < h; ++j) acc += row[j] * hact[j];
      const double target = x1[i] - x0[i];
      const double e = acc - target;
      out.loss += e * e * inv_b;
      err[i] = 2.0 * e * inv_b;
    }
    for (std::size_t j = 0; j < h; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d; ++i) acc += w2[i * h + j] * err[i];
      dh[j] = acc * (1.0 - hact[j] * hact[j]);
    }
    for (std::size_t i = 0; i < d; ++i) {
      gb2[i] += err[i];
      double* row = gw2 + i * h;
      for (std::size_t j = 0; j < h; ++j) row[j] += err[i] * hact[j];
    }
    for (std::size_t j = 0; j < h; ++j) {
      gb1[j] += dh[j];
      double* row = gw1 + j * (d + 1);
      for (std::size_t i = 0; i <= d; ++i) row[i] += dh[j] * a[i];
    }
  }
  return out;
}

namespace {

FlowBatch draw_batch(const FlowPrior& data_prior, const Shape& shape, std::size_t n, SeededRng& rng) {
  FlowBatch batch;
  batch.x0.reserve(n);
  batch.x1.reserve(n);
  batch.t.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    batch.x1.push_back(sample_prior(data_prior, rng));
    batch.x0.push_back(rng.standard_normal(shape));
    batch.t.push_back(rng.next_uniform());
  }
  return batch;
}

}  // namespace

TrainResult train_flow_matching(MlpVelocity model, const FlowPrior& data_prior, const TrainConfig& cfg,
                                SeededRng& rng) {
  if (!is_analytic(data_prior)) throw UnsupportedError("train_flow_matching: data prior must be analytic");
  if (cfg.steps == 0 || cfg.batch_size == 0) throw ParameterError("train_flow_matching: steps and batch_size >= 1");
  const Shape& shape = prior_shape(data_prior);
  if (numel(shape) != model.dim()) throw InvalidShapeError("train_flow_matching: model dim != prior dim");

  const FlowBatch eval_batch = draw_batch(data_prior, shape, cfg.eval_batch_size, rng);

  TrainResult result{std::move(model), {}};
  result.loss_curve.reserve(cfg.steps + 1);
  result.loss_curve.push_back(flow_matching_loss_and_grad(result.model, eval_batch).loss);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const FlowBatch batch = draw_batch(data_prior, shape, cfg.batch_size, rng);
    LossAndGrad lg = flow_matching_loss_and_grad(result.model, batch);
    if (!std::isfinite(lg.loss)) {
      throw TrainingDivergedError("train_flow_matching: non-finite loss at step " + std::to_string(step), step);
    }
    auto& p = result.model.params();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= cfg.learning_rate * lg.grad[i];
    result.loss_curve.push_back(flow_matching_loss_and_grad(result.model, eval_batch).loss);
  }
  return result;
}

void save_mlp(const std::filesystem::path& base, const MlpVelocity& model) {
  std::filesystem::path f64_path = base;
  f64_path += ".f64";
  write_f64(f64_path, Tensor({model.parameter_count()}, model.params()));
  nlohmann::json meta;
  meta["d"] = model.dim();
  meta["h"] = model.hidden();
  meta["activation"] = MlpVelocity::kActivation;
  std::filesystem::path json_path = base;
  json_path += ".json";
  write_text_file(json_path, meta.dump(2) + "\n");
}

MlpVelocity load_mlp(const std::filesystem::path& base) {
  std::filesystem::path json_path = base;
  json_path += ".json";
  const nlohmann::json meta = nlohmann::json::parse(read_text_file(json_path));
  if (meta.at("activation").get<std::string>() != MlpVelocity::kActivation) {
    throw ConfigError("load_mlp: unsupported activation in " + json_path.string());
  }
  MlpVelocity model(meta.at("d").get<std::size_t>(), meta.at("h").get<std::size_t>());
  std::filesystem::path f64_path = base;
  f64_path += ".f64";
  const Tensor params = read_f64(f64_path);
  if (params.size() != model.parameter_count()) throw ConfigError("load_mlp: parameter blob size mismatch");
  model.params() = params.values();
  return model;
}

}  // namespace flowadmm
