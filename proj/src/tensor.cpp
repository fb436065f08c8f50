#include "flowadmm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace flowadmm {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw InvalidShapeError("empty shape");
  for (std::size_t d : shape) {
    if (d == 0) throw InvalidShapeError("zero-size dimension in shape " + shape_to_string(shape));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  if (numel(shape_) != data_.size()) {
    throw InvalidShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                            shape_to_string(shape_));
  }
}

Tensor Tensor::zeros(const Shape& shape) {
  validate_shape(shape);
  return Tensor(shape, std::vector<double>(numel(shape), 0.0));
}

Tensor Tensor::full(const Shape& shape, double value) {
  validate_shape(shape);
  return Tensor(shape, std::vector<double>(numel(shape), value));
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op_name) {
  if (!a.same_shape(b)) {
    throw InvalidShapeError(std::string(op_name) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                            shape_to_string(b.shape()));
  }
}

Tensor& Tensor::operator+=(const Tensor& rhs) {
  require_same_shape(*this, rhs, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& rhs) {
  require_same_shape(*this, rhs, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Tensor operator+(Tensor lhs, const Tensor& rhs) {
  lhs += rhs;
  return lhs;
}

Tensor operator-(Tensor lhs, const Tensor& rhs) {
  lhs -= rhs;
  return lhs;
}

Tensor operator*(double s, Tensor t) {
  t *= s;
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(const Tensor& t) { return std::sqrt(dot(t, t)); }

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) m = std::max(m, std::fabs(t[i]));
  return m;
}

double l2_distance(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "l2_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double mse(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

Tensor clip01(Tensor t) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::clamp(t[i], 0.0, 1.0);
  return t;
}

ImageDims image_dims(const Shape& shape) {
  if (shape.size() == 2) return ImageDims{1, shape[0], shape[1]};
  if (shape.size() == 3) return ImageDims{shape[0], shape[1], shape[2]};
  throw InvalidShapeError("expected [H,W] or [C,H,W], got " + shape_to_string(shape));
}

}  // namespace flowadmm
