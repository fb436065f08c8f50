#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flowadmm/dft.hpp"
#include "flowadmm/tensor.hpp"

namespace flowadmm {

// Abstract linear forward operator with adjoint.
class LinearOp {
 public:
  virtual ~LinearOp() = default;
  virtual Tensor apply(const Tensor& x) const = 0;
  virtual Tensor adjoint(const Tensor& y) const = 0;
  virtual const Shape& input_shape() const = 0;
  virtual const Shape& output_shape() const = 0;
};

enum class OpKind { identity, gaussian_blur, subsample, box_mask, bernoulli_mask };

std::string op_kind_name(OpKind kind);
OpKind op_kind_from_name(const std::string& name);

// Parameters of a task forward operator; only the fields relevant to `kind`
// are read.
struct TaskOpSpec {
  OpKind kind = OpKind::identity;
  std::size_t kernel_size = 0;
  double sigma_blur = 0.0;
  std::size_t stride = 1;
  std::size_t half_size = 0;
  double missing_prob = 0.0;
  std::uint64_t mask_seed = 0;
};

// Forward operator in factored form A = Qᵀ Λ P with orthogonal P, Q (pixel
// basis or unitary per-channel DFT) and a per-coefficient spectrum Λ. The
// factorization makes the data proximal map elementwise in the P-basis.
//
// Instances are immutable after construction; concurrent apply/adjoint/prox
// calls are safe (the DFT tables are read-only).
class DiagonalizableOp : public LinearOp {
 public:
  enum class Basis { pixel, fourier };

  Tensor apply(const Tensor& x) const override;
  Tensor adjoint(const Tensor& y) const override;
  const Shape& input_shape() const override { return input_shape_; }
  const Shape& output_shape() const override { return output_shape_; }

  // Exact minimizer of (1/2)||x - v||² + (mu/2)||A x - y||².
  Tensor prox_data(const Tensor& v, const Tensor& y, double mu) const;

  // Factor access, used by tests and by the affine ADMM spectral analysis.
  CVec analysis(const Tensor& x) const;                 // P x
  Tensor synthesis(const CVec& coeffs) const;           // Pᵀ c (real part)
  CVec output_analysis(const Tensor& y) const;          // Q y
  Tensor output_synthesis(const CVec& coeffs) const;    // Qᵀ c (real part)

  const CVec& spectrum() const { return lambda_; }      // λ over input coefficients
  std::vector<double> spectrum_sq_magnitudes() const;   // |λ|² == diag(AᵀA) in P-basis
  double min_sq_magnitude() const;                      // λ_min(AᵀA)
  Basis basis() const { return basis_; }
  // Row-major input indices that survive subsampling, in output order; empty
  // for operators whose output space equals the input space.
  const std::vector<std::size_t>& kept_indices() const { return kept_; }

  // Pixel-domain 0/1 mask (mask operators only), exportable as PGM.
  Tensor mask_tensor() const;

  static DiagonalizableOp make_identity(const Shape& shape);
  static DiagonalizableOp make_gaussian_blur(const Shape& shape, std::size_t kernel_size, double sigma_blur);
  static DiagonalizableOp make_subsample(const Shape& shape, std::size_t stride);
  static DiagonalizableOp make_box_mask(const Shape& shape, std::size_t half_size);
  static DiagonalizableOp make_bernoulli_mask(const Shape& shape, double missing_prob, std::uint64_t mask_seed);
  static DiagonalizableOp make(const Shape& shape, const TaskOpSpec& spec);

 private:
  DiagonalizableOp() = default;

  // Embed output coefficients into input coefficient space (zero-filled on
  // dropped positions) and apply conj(λ).
  CVec adjoint_coeffs(const CVec& out_coeffs) const;

  Shape input_shape_;
  Shape output_shape_;
  Basis basis_ = Basis::pixel;
  CVec lambda_;
  std::vector<std::size_t> kept_;
  std::shared_ptr<const Dft2> dft_;      // input-shape plane transform (fourier basis)
  ImageDims dims_{1, 0, 0};
  ImageDims out_dims_{1, 0, 0};
};

struct CgResult {
  Tensor x;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

// Conjugate gradient on the normal equations (I + mu AᵀA) x = v + mu Aᵀ y,
// stopping when ||r|| <= tol·||rhs||. Throws ConvergenceError (carrying the
// final relative residual) when max_iters is exhausted first.
CgResult prox_data_cg(const LinearOp& op, const Tensor& v, const Tensor& y, double mu, double tol,
                      std::size_t max_iters);

}  // namespace flowadmm
