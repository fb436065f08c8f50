#include "flowadmm/dft.hpp"

#include <cmath>

namespace flowadmm {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

CVec make_table(std::size_t n, double sign, bool unitary) {
  CVec table(n * n);
  const double scale = unitary ? 1.0 / std::sqrt(static_cast<double>(n)) : 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      // Reduce k*j mod n first so the angle stays small and accurate.
      const std::size_t kj = (k * j) % n;
      const double angle = sign * kTwoPi * static_cast<double>(kj) / static_cast<double>(n);
      table[k * n + j] = std::polar(scale, angle);
    }
  }
  return table;
}

}  // namespace

Dft2::Dft2(std::size_t height, std::size_t width)
    : height_(height),
      width_(width),
      row_table_(make_table(width, -1.0, true)),
      col_table_(make_table(height, -1.0, true)),
      row_table_inv_(make_table(width, 1.0, true)),
      col_table_inv_(make_table(height, 1.0, true)) {}

CVec Dft2::transform_rows(const CVec& in, const CVec& table, std::size_t rows, std::size_t cols) const {
  CVec out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::complex<double>* src = in.data() + r * cols;
    for (std::size_t k = 0; k < cols; ++k) {
      std::complex<double> acc = 0.0;
      const std::complex<double>* t = table.data() + k * cols;
      for (std::size_t j = 0; j < cols; ++j) acc += t[j] * src[j];
      out[r * cols + k] = acc;
    }
  }
  return out;
}

CVec Dft2::forward(const double* plane) const {
  CVec c(height_ * width_);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = plane[i];
  return forward_complex(c);
}

CVec Dft2::forward_complex(const CVec& plane) const {
  CVec rows_done = transform_rows(plane, row_table_, height_, width_);
  // Column pass: transpose, transform, transpose back.
  CVec t(height_ * width_);
  for (std::size_t r = 0; r < height_; ++r)
    for (std::size_t c = 0; c < width_; ++c) t[c * height_ + r] = rows_done[r * width_ + c];
  CVec cols_done = transform_rows(t, col_table_, width_, height_);
  CVec out(height_ * width_);
  for (std::size_t c = 0; c < width_; ++c)
    for (std::size_t r = 0; r < height_; ++r) out[r * width_ + c] = cols_done[c * height_ + r];
  return out;
}

std::vector<double> Dft2::inverse_real(const CVec& coeffs) const {
  CVec rows_done = transform_rows(coeffs, row_table_inv_, height_, width_);
  CVec t(height_ * width_);
  for (std::size_t r = 0; r < height_; ++r)
    for (std::size_t c = 0; c < width_; ++c) t[c * height_ + r] = rows_done[r * width_ + c];
  CVec cols_done = transform_rows(t, col_table_inv_, width_, height_);
  std::vector<double> out(height_ * width_);
  for (std::size_t c = 0; c < width_; ++c)
    for (std::size_t r = 0; r < height_; ++r) out[r * width_ + c] = cols_done[c * height_ + r].real();
  return out;
}

CVec dft_unnormalized_2d(const std::vector<double>& plane, std::size_t height, std::size_t width) {
  const CVec row = make_table(width, -1.0, false);
  const CVec col = make_table(height, -1.0, false);
  CVec out(height * width);
  for (std::size_t kr = 0; kr < height; ++kr) {
    for (std::size_t kc = 0; kc < width; ++kc) {
      std::complex<double> acc = 0.0;
      for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
          acc += plane[r * width + c] * col[kr * height + r] * row[kc * width + c];
        }
      }
      out[kr * width + kc] = acc;
    }
  }
  return out;
}

}  // namespace flowadmm
