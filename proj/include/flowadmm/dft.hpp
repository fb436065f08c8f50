#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace flowadmm {

using CVec = std::vector<std::complex<double>>;

// Unitary 2-D discrete Fourier transform on one H×W plane, realized with
// precomputed exponential tables (O(HW(H+W)) apply). Unitary scaling keeps
// forward/inverse norm-preserving, which is what the A = QᵀΛP factorization
// needs from its orthogonal transforms; the spectrum of a circular
// convolution is then the plain unnormalized DFT of its kernel.
class Dft2 {
 public:
  Dft2(std::size_t height, std::size_t width);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }

  // c = F x (unitary), x row-major real plane of size H*W.
  CVec forward(const double* plane) const;
  // x = Fᴴ c, returning the real part (imaginary parts cancel for
  // Hermitian-symmetric inputs, which is every use in this project).
  std::vector<double> inverse_real(const CVec& coeffs) const;

  CVec forward_complex(const CVec& plane) const;

 private:
  CVec transform_rows(const CVec& in, const CVec& table, std::size_t rows, std::size_t cols) const;

  std::size_t height_;
  std::size_t width_;
  CVec row_table_;      // width × width, exp(-2πi jk / W) / sqrt(W)
  CVec col_table_;      // height × height
  CVec row_table_inv_;  // conjugates
  CVec col_table_inv_;
};

// Unnormalized 1-D DFT coefficients sum_j x_j exp(-2πi jk / n); used for
// convolution spectra.
CVec dft_unnormalized_2d(const std::vector<double>& plane, std::size_t height, std::size_t width);

}  // namespace flowadmm
