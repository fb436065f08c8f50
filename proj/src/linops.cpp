#include "flowadmm/linops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowadmm/rng.hpp"

namespace {

void require_shape(const flowadmm::Tensor& t, const flowadmm::Shape& shape, const char* what) {
  if (t.shape() != shape) {
    throw flowadmm::InvalidShapeError(std::string(what) + ": expected " + flowadmm::shape_to_string(shape) +
                                      ", got " + flowadmm::shape_to_string(t.shape()));
  }
}

// Operators also accept plain vectors [n] (treated as a 1xn plane); the
// geometry-aware factories below still demand real image shapes.
flowadmm::ImageDims op_dims(const flowadmm::Shape& shape) {
  if (shape.size() == 1) return flowadmm::ImageDims{1, 1, shape[0]};
  return flowadmm::image_dims(shape);
}

}  // namespace

namespace flowadmm {

std::string op_kind_name(OpKind kind) {
  switch (kind) {
    case OpKind::identity: return "identity";
    case OpKind::gaussian_blur: return "gaussian_blur";
    case OpKind::subsample: return "subsample";
    case OpKind::box_mask: return "box_mask";
    case OpKind::bernoulli_mask: return "bernoulli_mask";
  }
  throw ParameterError("unknown operator kind");
}

OpKind op_kind_from_name(const std::string& name) {
  if (name == "identity") return OpKind::identity;
  if (name == "gaussian_blur") return OpKind::gaussian_blur;
  if (name == "subsample") return OpKind::subsample;
  if (name == "box_mask") return OpKind::box_mask;
  if (name == "bernoulli_mask") return OpKind::bernoulli_mask;
  throw ParameterError("unknown operator kind '" + name + "'");
}

CVec DiagonalizableOp::analysis(const Tensor& x) const {
  require_shape(x, input_shape_, "analysis");
  const std::size_t plane = dims_.height * dims_.width;
  CVec out(x.size());
  if (basis_ == Basis::pixel) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i];
    return out;
  }
  for (std::size_t c = 0; c < dims_.channels; ++c) {
    CVec coeffs = dft_->forward(x.data() + c * plane);
    std::copy(coeffs.begin(), coeffs.end(), out.begin() + c * plane);
  }
  return out;
}

Tensor DiagonalizableOp::synthesis(const CVec& coeffs) const {
  const std::size_t plane = dims_.height * dims_.width;
  Tensor out = Tensor::zeros(input_shape_);
  if (basis_ == Basis::pixel) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = coeffs[i].real();
    return out;
  }
  for (std::size_t c = 0; c < dims_.channels; ++c) {
    CVec chan(coeffs.begin() + c * plane, coeffs.begin() + (c + 1) * plane);
    std::vector<double> x = dft_->inverse_real(chan);
    std::copy(x.begin(), x.end(), out.data() + c * plane);
  }
  return out;
}

CVec DiagonalizableOp::output_analysis(const Tensor& y) const {
  require_shape(y, output_shape_, "output_analysis");
  if (basis_ == Basis::pixel || !kept_.empty()) {
    CVec out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i];
    return out;
  }
  // fourier, full-size output: same transform as the input side
  return analysis(y);
}

Tensor DiagonalizableOp::output_synthesis(const CVec& coeffs) const {
  if (basis_ == Basis::pixel || !kept_.empty()) {
    Tensor out = Tensor::zeros(output_shape_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = coeffs[i].real();
    return out;
  }
  return synthesis(coeffs);
}

CVec DiagonalizableOp::adjoint_coeffs(const CVec& out_coeffs) const {
  CVec c(numel(input_shape_), 0.0);
  if (kept_.empty()) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::conj(lambda_[i]) * out_coeffs[i];
  } else {
    for (std::size_t j = 0; j < kept_.size(); ++j) c[kept_[j]] = std::conj(lambda_[kept_[j]]) * out_coeffs[j];
  }
  return c;
}

Tensor DiagonalizableOp::apply(const Tensor& x) const {
  CVec c = analysis(x);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= lambda_[i];
  if (kept_.empty()) return output_synthesis(c);
  CVec packed(kept_.size());
  for (std::size_t j = 0; j < kept_.size(); ++j) packed[j] = c[kept_[j]];
  return output_synthesis(packed);
}

Tensor DiagonalizableOp::adjoint(const Tensor& y) const {
  return synthesis(adjoint_coeffs(output_analysis(y)));
}

Tensor DiagonalizableOp::prox_data(const Tensor& v, const Tensor& y, double mu) const {
  if (!(mu > 0.0)) throw ParameterError("prox_data: mu must be > 0");
  CVec cv = analysis(v);
  CVec w = adjoint_coeffs(output_analysis(y));
  for (std::size_t i = 0; i < cv.size(); ++i) {
    const double s = std::norm(lambda_[i]);
    cv[i] = (cv[i] + mu * w[i]) / (1.0 + mu * s);
  }
  return synthesis(cv);
}

std::vector<double> DiagonalizableOp::spectrum_sq_magnitudes() const {
  std::vector<double> s(lambda_.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::norm(lambda_[i]);
  return s;
}

double DiagonalizableOp::min_sq_magnitude() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& l : lambda_) m = std::min(m, std::norm(l));
  return m;
}

Tensor DiagonalizableOp::mask_tensor() const {
  if (basis_ != Basis::pixel || !kept_.empty()) throw UnsupportedError("mask_tensor: not a pixel-domain mask");
  Tensor m = Tensor::zeros(input_shape_);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = lambda_[i].real();
  return m;
}

DiagonalizableOp DiagonalizableOp::make_identity(const Shape& shape) {
  validate_shape(shape);
  DiagonalizableOp op;
  op.input_shape_ = shape;
  op.output_shape_ = shape;
  op.dims_ = op_dims(shape);
  op.out_dims_ = op.dims_;
  op.basis_ = Basis::pixel;
  op.lambda_.assign(numel(shape), 1.0);
  return op;
}

DiagonalizableOp DiagonalizableOp::make_gaussian_blur(const Shape& shape, std::size_t kernel_size,
                                                      double sigma_blur) {
  validate_shape(shape);
  const ImageDims d = image_dims(shape);
  if (kernel_size % 2 == 0 || kernel_size == 0) throw ParameterError("gaussian_blur: kernel_size must be odd");
  if (!(sigma_blur > 0.0)) throw ParameterError("gaussian_blur: sigma_blur must be > 0");
  if (kernel_size > std::min(d.height, d.width)) {
    throw ParameterError("gaussian_blur: kernel_size exceeds image side");
  }

  const std::size_t half = (kernel_size - 1) / 2;
  // L1-normalized truncated Gaussian, then zero-padded with its center at
  // (0,0) so circular convolution has no phase shift.
  std::vector<double> kernel(kernel_size * kernel_size);
  double sum = 0.0;
  for (std::size_t r = 0; r < kernel_size; ++r) {
    for (std::size_t c = 0; c < kernel_size; ++c) {
      const double dr = static_cast<double>(r) - static_cast<double>(half);
      const double dc = static_cast<double>(c) - static_cast<double>(half);
      const double v = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma_blur * sigma_blur));
      kernel[r * kernel_size + c] = v;
      sum += v;
    }
  }
  for (double& v : kernel) v /= sum;

  std::vector<double> padded(d.height * d.width, 0.0);
  for (std::size_t r = 0; r < kernel_size; ++r) {
    for (std::size_t c = 0; c < kernel_size; ++c) {
      const std::size_t rr = (r + d.height - half) % d.height;
      const std::size_t cc = (c + d.width - half) % d.width;
      padded[rr * d.width + cc] += kernel[r * kernel_size + c];
    }
  }

  DiagonalizableOp op;
  op.input_shape_ = shape;
  op.output_shape_ = shape;
  op.dims_ = d;
  op.out_dims_ = d;
  op.basis_ = Basis::fourier;
  op.dft_ = std::make_shared<Dft2>(d.height, d.width);
  CVec plane_lambda = dft_unnormalized_2d(padded, d.height, d.width);
  op.lambda_.resize(numel(shape));
  for (std::size_t c = 0; c < d.channels; ++c) {
    std::copy(plane_lambda.begin(), plane_lambda.end(), op.lambda_.begin() + c * plane_lambda.size());
  }
  return op;
}

DiagonalizableOp DiagonalizableOp::make_subsample(const Shape& shape, std::size_t stride) {
  validate_shape(shape);
  const ImageDims d = image_dims(shape);
  if (stride == 0 || d.height % stride != 0 || d.width % stride != 0) {
    throw ParameterError("subsample: stride must divide both spatial dims");
  }
  DiagonalizableOp op;
  op.input_shape_ = shape;
  op.dims_ = d;
  op.out_dims_ = ImageDims{d.channels, d.height / stride, d.width / stride};
  if (shape.size() == 2) {
    op.output_shape_ = {op.out_dims_.height, op.out_dims_.width};
  } else {
    op.output_shape_ = {d.channels, op.out_dims_.height, op.out_dims_.width};
  }
  op.basis_ = Basis::pixel;
  op.lambda_.assign(numel(shape), 0.0);
  const std::size_t plane = d.height * d.width;
  op.kept_.reserve(numel(op.output_shape_));
  for (std::size_t c = 0; c < d.channels; ++c) {
    for (std::size_t r = 0; r < d.height; r += stride) {
      for (std::size_t col = 0; col < d.width; col += stride) {
        const std::size_t idx = c * plane + r * d.width + col;
        op.kept_.push_back(idx);
        op.lambda_[idx] = 1.0;
      }
    }
  }
  return op;
}

DiagonalizableOp DiagonalizableOp::make_box_mask(const Shape& shape, std::size_t half_size) {
  validate_shape(shape);
  const ImageDims d = image_dims(shape);
  if (2 * half_size > std::min(d.height, d.width)) throw ParameterError("box_mask: box exceeds image");
  DiagonalizableOp op;
  op.input_shape_ = shape;
  op.output_shape_ = shape;
  op.dims_ = d;
  op.out_dims_ = d;
  op.basis_ = Basis::pixel;
  op.lambda_.assign(numel(shape), 1.0);
  // Removed square spans [floor(H/2)-half, floor(H/2)+half-1] per axis.
  const std::size_t r0 = d.height / 2 - half_size;
  const std::size_t c0 = d.width / 2 - half_size;
  const std::size_t plane = d.height * d.width;
  for (std::size_t c = 0; c < d.channels; ++c) {
    for (std::size_t r = r0; r < r0 + 2 * half_size; ++r) {
      for (std::size_t col = c0; col < c0 + 2 * half_size; ++col) {
        op.lambda_[c * plane + r * d.width + col] = 0.0;
      }
    }
  }
  return op;
}

DiagonalizableOp DiagonalizableOp::make_bernoulli_mask(const Shape& shape, double missing_prob,
                                                       std::uint64_t mask_seed) {
  validate_shape(shape);
  if (!(missing_prob >= 0.0 && missing_prob < 1.0)) {
    throw ParameterError("bernoulli_mask: missing_prob must be in [0,1)");
  }
  const ImageDims d = image_dims(shape);
  DiagonalizableOp op;
  op.input_shape_ = shape;
  op.output_shape_ = shape;
  op.dims_ = d;
  op.out_dims_ = d;
  op.basis_ = Basis::pixel;
  op.lambda_.assign(numel(shape), 1.0);
  // One mask per pixel, shared across channels, fixed by mask_seed.
  SeededRng rng(mask_seed);
  const std::size_t plane = d.height * d.width;
  for (std::size_t p = 0; p < plane; ++p) {
    if (rng.next_uniform() < missing_prob) {
      for (std::size_t c = 0; c < d.channels; ++c) op.lambda_[c * plane + p] = 0.0;
    }
  }
  return op;
}

DiagonalizableOp DiagonalizableOp::make(const Shape& shape, const TaskOpSpec& spec) {
  switch (spec.kind) {
    case OpKind::identity: return make_identity(shape);
    case OpKind::gaussian_blur: return make_gaussian_blur(shape, spec.kernel_size, spec.sigma_blur);
    case OpKind::subsample: return make_subsample(shape, spec.stride);
    case OpKind::box_mask: return make_box_mask(shape, spec.half_size);
    case OpKind::bernoulli_mask: return make_bernoulli_mask(shape, spec.missing_prob, spec.mask_seed);
  }
  throw ParameterError("unknown operator kind");
}

CgResult prox_data_cg(const LinearOp& op, const Tensor& v, const Tensor& y, double mu, double tol,
                      std::size_t max_iters) {
  if (!(mu > 0.0)) throw ParameterError("prox_data_cg: mu must be > 0");
  if (!(tol > 0.0)) throw ParameterError("prox_data_cg: tol must be > 0");

  const auto normal_apply = [&](const Tensor& x) {
    Tensor out = op.adjoint(op.apply(x));
    out *= mu;
    out += x;
    return out;
  };

  Tensor rhs = op.adjoint(y);
  rhs *= mu;
  rhs += v;
  const double rhs_norm = norm2(rhs);
  if (rhs_norm == 0.0) return CgResult{Tensor::zeros(v.shape()), 0, 0.0};

  Tensor x = Tensor::zeros(v.shape());
  Tensor r = rhs;
  Tensor p = r;
  double rr = dot(r, r);
  for (std::size_t k = 0; k < max_iters; ++k) {
    if (std::sqrt(rr) <= tol * rhs_norm) return CgResult{std::move(x), k, std::sqrt(rr) / rhs_norm};
    Tensor ap = normal_apply(p);
    const double alpha = rr / dot(p, ap);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_next = dot(r, r);
    const double beta = rr_next / rr;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
    rr = rr_next;
  }
  if (std::sqrt(rr) <= tol * rhs_norm) {
    return CgResult{std::move(x), max_iters, std::sqrt(rr) / rhs_norm};
  }
  throw ConvergenceError("prox_data_cg: no convergence after " + std::to_string(max_iters) + " iterations",
                         std::sqrt(rr) / rhs_norm, max_iters);
}

}  // namespace flowadmm
