#include "flowadmm/rng.hpp"

#include <cmath>

namespace flowadmm {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix_finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

std::uint64_t SeededRng::next_u64() {
  state_ += kGamma;
  return splitmix_finalize(state_);
}

double SeededRng::next_uniform() {
  // 53 random bits, shifted into (0,1].
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double SeededRng::next_normal() {
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

Tensor SeededRng::standard_normal(const Shape& shape) {
  validate_shape(shape);
  Tensor out = Tensor::zeros(shape);
  const std::size_t n = out.size();
  std::size_t i = 0;
  while (i < n) {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[i++] = r * std::cos(kTwoPi * u2);
    if (i < n) out[i++] = r * std::sin(kTwoPi * u2);
  }
  return out;
}

SeededRng SeededRng::fork(std::uint64_t stream_index) const {
  return SeededRng(mix_seed(state_, stream_index));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_index) {
  return splitmix_finalize(seed ^ ((stream_index + 1) * kGamma));
}

}  // namespace flowadmm
