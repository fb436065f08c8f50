#pragma once

#include <cstdint>

#include "flowadmm/tensor.hpp"

namespace flowadmm {

// Deterministic seeded generator. The uniform source is splitmix64 and normal
// variates come from Box-Muller on top of it, so identical seeds give
// bitwise-identical streams on every platform; the C++ standard library
// distributions carry no such guarantee.
//
// A SeededRng instance is single-owner. Parallel work forks independent
// child streams with fork(stream_index) instead of sharing one instance.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform in (0,1]; never returns 0 so log() is always finite.
  double next_uniform();

  // One standard normal draw. Consumes a full Box-Muller pair (two uniforms).
  double next_normal();

  // i.i.d. standard normal entries, filled in row-major order by Box-Muller
  // pairs; an odd-length tail consumes a pair and keeps the first value.
  Tensor standard_normal(const Shape& shape);

  // Independent child stream derived from (current state, stream index).
  // Does not advance this generator.
  SeededRng fork(std::uint64_t stream_index) const;

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

// Stateless mix used for seed derivation (same finalizer as splitmix64).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_index);

}  // namespace flowadmm
