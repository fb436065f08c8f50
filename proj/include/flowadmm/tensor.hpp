#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "flowadmm/errors.hpp"

namespace flowadmm {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);
// Throws InvalidShapeError unless every dimension is >= 1 and the rank is >= 1.
void validate_shape(const Shape& shape);

// Dense double-precision tensor with explicit shape. Values are plain
// row-major storage; images use [H,W] or [C,H,W]. Tensors are value types:
// once returned from an operation they are never mutated through aliases, so
// sharing across threads is safe.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(const Shape& shape);
  static Tensor full(const Shape& shape, double value);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  Tensor& operator+=(const Tensor& rhs);
  Tensor& operator-=(const Tensor& rhs);
  Tensor& operator*=(double s);

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor operator+(Tensor lhs, const Tensor& rhs);
Tensor operator-(Tensor lhs, const Tensor& rhs);
Tensor operator*(double s, Tensor t);

// Throws InvalidShapeError when shapes differ; used by every pairwise op.
void require_same_shape(const Tensor& a, const Tensor& b, const char* op_name);

double dot(const Tensor& a, const Tensor& b);
double norm2(const Tensor& t);
double max_abs(const Tensor& t);

// sqrt(sum (a_i - b_i)^2)
double l2_distance(const Tensor& a, const Tensor& b);
// mean squared entrywise difference
double mse(const Tensor& a, const Tensor& b);

Tensor clip01(Tensor t);

// Image shape helpers: accept [H,W] (one channel) or [C,H,W].
struct ImageDims {
  std::size_t channels;
  std::size_t height;
  std::size_t width;
};
ImageDims image_dims(const Shape& shape);

}  // namespace flowadmm
