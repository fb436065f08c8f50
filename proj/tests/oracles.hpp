// Independent reference implementations used only by tests. Everything here
// is deliberately naive (scalar loops, dense matrices, quadrature) so it
// shares no code path with the library it checks.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "flowadmm/tensor.hpp"

namespace oracles {

inline double naive_l2_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

// Direct O(n^2) circular convolution of an HxW plane with a (2h+1)^2 kernel
// centered at its middle entry.
inline std::vector<double> circular_convolve(const std::vector<double>& img, std::size_t height,
                                             std::size_t width, const std::vector<double>& kernel,
                                             std::size_t ksize) {
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(ksize / 2);
  std::vector<double> out(img.size(), 0.0);
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(height); ++r) {
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(width); ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t kr = -half; kr <= half; ++kr) {
        for (std::ptrdiff_t kc = -half; kc <= half; ++kc) {
          const std::size_t rr =
              static_cast<std::size_t>(((r - kr) % static_cast<std::ptrdiff_t>(height) + height) % height);
          const std::size_t cc =
              static_cast<std::size_t>(((c - kc) % static_cast<std::ptrdiff_t>(width) + width) % width);
          acc += kernel[static_cast<std::size_t>(kr + half) * ksize + static_cast<std::size_t>(kc + half)] *
                 img[rr * width + cc];
        }
      }
      out[static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c)] = acc;
    }
  }
  return out;
}

// Largest singular value of a dense matrix via cyclic Jacobi on AᵀA.
inline double dense_sigma_max(const std::vector<double>& a, std::size_t rows, std::size_t cols) {
  std::vector<double> s(cols * cols, 0.0);
  for (std::size_t i = 0; i < cols; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < rows; ++r) acc += a[r * cols + i] * a[r * cols + j];
      s[i * cols + j] = acc;
    }
  }
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) off += s[p * cols + q] * s[p * cols + q];
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        const double apq = s[p * cols + q];
        if (std::fabs(apq) < 1e-300) continue;
        const double app = s[p * cols + p];
        const double aqq = s[q * cols + q];
        const double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
        const double c = std::cos(theta);
        const double sn = std::sin(theta);
        for (std::size_t k = 0; k < cols; ++k) {
          const double skp = s[k * cols + p];
          const double skq = s[k * cols + q];
          s[k * cols + p] = c * skp - sn * skq;
          s[k * cols + q] = sn * skp + c * skq;
        }
        for (std::size_t k = 0; k < cols; ++k) {
          const double spk = s[p * cols + k];
          const double sqk = s[q * cols + k];
          s[p * cols + k] = c * spk - sn * sqk;
          s[q * cols + k] = sn * spk + c * sqk;
        }
      }
    }
  }
  double lam = 0.0;
  for (std::size_t i = 0; i < cols; ++i) lam = std::max(lam, s[i * cols + i]);
  return std::sqrt(std::max(lam, 0.0));
}

// Posterior mean E[x1 | x_t] for a scalar mixture prior by trapezoid
// quadrature of the Bayes integrals over [-10, 10].
inline double quadrature_posterior_mean(const std::vector<double>& weights, const std::vector<double>& means,
                                        const std::vector<double>& variances, double t, double xt,
                                        std::size_t nodes = 100000) {
  const double lo = -10.0, hi = 10.0;
  const double h = (hi - lo) / static_cast<double>(nodes - 1);
  const double omt2 = (1.0 - t) * (1.0 - t);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double x1 = lo + h * static_cast<double>(i);
    double prior = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      prior += weights[k] * std::exp(-0.5 * (x1 - means[k]) * (x1 - means[k]) / variances[k]) /
               std::sqrt(2.0 * M_PI * variances[k]);
    }
    const double like = std::exp(-0.5 * (xt - t * x1) * (xt - t * x1) / omt2);
    const double w = (i == 0 || i + 1 == nodes) ? 0.5 : 1.0;
    num += w * x1 * prior * like;
    den += w * prior * like;
  }
  return num / den;
}

// Eigenvalue moduli of a dense 2x2 real matrix by the quadratic formula.
inline double radius_2x2(double a11, double a12, double a21, double a22) {
  const double tr = a11 + a22;
  const double det = a11 * a22 - a12 * a21;
  const double disc = tr * tr - 4.0 * det;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    return std::max(std::fabs((tr + root) / 2.0), std::fabs((tr - root) / 2.0));
  }
  return std::sqrt(det);  // complex pair, modulus sqrt(det)
}

}  // namespace oracles
