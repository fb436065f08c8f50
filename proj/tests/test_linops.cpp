#include <doctest.h>

#include <cmath>

#include "flowadmm/linops.hpp"
#include "flowadmm/rng.hpp"

#include "oracles.hpp"

using namespace flowadmm;

namespace {

// Every operator kind at 16x16, parameters scaled for that size.
std::vector<DiagonalizableOp> all_ops_16() {
  const Shape shape{16, 16};
  std::vector<DiagonalizableOp> ops;
  ops.push_back(DiagonalizableOp::make_identity(shape));
  ops.push_back(DiagonalizableOp::make_gaussian_blur(shape, 7, 1.0));
  ops.push_back(DiagonalizableOp::make_subsample(shape, 2));
  ops.push_back(DiagonalizableOp::make_box_mask(shape, 3));
  ops.push_back(DiagonalizableOp::make_bernoulli_mask(shape, 0.7, 99));
  return ops;
}

}  // namespace

TEST_CASE("adjoint identity on all operator kinds") {
  SeededRng rng(21);
  for (const DiagonalizableOp& op : all_ops_16()) {
    for (int trial = 0; trial < 50; ++trial) {
      const Tensor x = rng.standard_normal(op.input_shape());
      const Tensor y = rng.standard_normal(op.output_shape());
      const double lhs = dot(op.apply(x), y);
      const double rhs = dot(x, op.adjoint(y));
      CHECK(std::fabs(lhs - rhs) <= 1e-10 * (1.0 + std::fabs(lhs)));
    }
  }
}

TEST_CASE("diagonalization consistency: apply == Q^T Lambda P") {
  SeededRng rng(22);
  for (const DiagonalizableOp& op : all_ops_16()) {
    const Tensor x = rng.standard_normal(op.input_shape());
    CVec c = op.analysis(x);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= op.spectrum()[i];
    Tensor composed;
    if (op.kept_indices().empty()) {
      composed = op.output_synthesis(c);
    } else {
      CVec packed(op.kept_indices().size());
      for (std::size_t j = 0; j < packed.size(); ++j) packed[j] = c[op.kept_indices()[j]];
      composed = op.output_synthesis(packed);
    }
    CHECK(l2_distance(composed, op.apply(x)) <= 1e-10);
  }
}

TEST_CASE("orthogonal transforms preserve the l2 norm") {
  SeededRng rng(23);
  for (const DiagonalizableOp& op : all_ops_16()) {
    const Tensor x = rng.standard_normal(op.input_shape());
    const CVec c = op.analysis(x);
    double coeff_norm = 0.0;
    for (const auto& v : c) coeff_norm += std::norm(v);
    CHECK(std::sqrt(coeff_norm) == doctest::Approx(norm2(x)).epsilon(1e-10));
  }
}

TEST_CASE("identity operator") {
  const auto op = DiagonalizableOp::make_identity({4, 4});
  SeededRng rng(1);
  const Tensor x = rng.standard_normal({4, 4});
  CHECK(l2_distance(op.apply(x), x) == 0.0);
  CHECK(l2_distance(op.adjoint(x), x) == 0.0);

  // prox with mu=1, v=0, y=2 -> 1 per entry
  const Tensor v = Tensor::zeros({4, 4});
  const Tensor y = Tensor::full({4, 4}, 2.0);
  const Tensor p = op.prox_data(v, y, 1.0);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("gaussian blur spectrum and oracle") {
  const auto op = DiagonalizableOp::make_gaussian_blur({8, 8}, 5, 1.2);
  // DC gain 1 (kernel normalized)
  CHECK(op.spectrum()[0].real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::fabs(op.spectrum()[0].imag()) < 1e-12);

  // constant image unchanged
  const Tensor c = Tensor::full({8, 8}, 0.42);
  CHECK(l2_distance(op.apply(c), c) <= 1e-10);

  // match direct spatial circular convolution
  SeededRng rng(31);
  const Tensor x = rng.standard_normal({8, 8});
  // rebuild the same normalized kernel
  std::vector<double> kernel(5 * 5);
  double sum = 0.0;
  for (int r = 0; r < 5; ++r) {
    for (int cc = 0; cc < 5; ++cc) {
      const double dr = r - 2, dc = cc - 2;
      kernel[r * 5 + cc] = std::exp(-(dr * dr + dc * dc) / (2.0 * 1.2 * 1.2));
      sum += kernel[r * 5 + cc];
    }
  }
  for (double& k : kernel) k /= sum;
  const std::vector<double> expected = oracles::circular_convolve(x.values(), 8, 8, kernel, 5);
  const Tensor got = op.apply(x);
  CHECK(oracles::naive_l2_distance(got.values(), expected) <= 1e-10);
}

TEST_CASE("gaussian blur parameter validation") {
  CHECK_THROWS_AS(DiagonalizableOp::make_gaussian_blur({8, 8}, 4, 1.0), ParameterError);
  CHECK_THROWS_AS(DiagonalizableOp::make_gaussian_blur({8, 8}, 5, 0.0), ParameterError);
  CHECK_THROWS_AS(DiagonalizableOp::make_gaussian_blur({8, 8}, 9, 1.0), ParameterError);
}

TEST_CASE("subsample keeps the top-left anchored grid") {
  const auto op = DiagonalizableOp::make_subsample({4, 4}, 2);
  std::vector<double> data(16);
  for (std::size_t i = 0; i < 16; ++i) data[i] = static_cast<double>(i);
  const Tensor x({4, 4}, data);
  const Tensor y = op.apply(x);
  REQUIRE(y.shape() == Shape{2, 2});
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 2.0);
  CHECK(y[2] == 8.0);
  CHECK(y[3] == 10.0);

  // adjoint-of-apply keeps kept pixels and zeros the rest
  SeededRng rng(33);
  const Tensor z = rng.standard_normal({4, 4});
  const Tensor back = op.adjoint(op.apply(z));
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      const double expect = (r % 2 == 0 && c % 2 == 0) ? z[r * 4 + c] : 0.0;
      CHECK(back[r * 4 + c] == expect);
    }
  }

  // stride 1 behaves as identity
  const auto id = DiagonalizableOp::make_subsample({4, 4}, 1);
  CHECK(l2_distance(id.apply(z), z) == 0.0);

  CHECK_THROWS_AS(DiagonalizableOp::make_subsample({4, 4}, 3), ParameterError);
}

TEST_CASE("box mask geometry at 6x6, half 1") {
  const auto op = DiagonalizableOp::make_box_mask({6, 6}, 1);
  const Tensor ones = Tensor::full({6, 6}, 1.0);
  const Tensor masked = op.apply(ones);
  std::size_t zeros = 0;
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 6; ++c) {
      const bool in_box = (r == 2 || r == 3) && (c == 2 || c == 3);
      CHECK(masked[r * 6 + c] == (in_box ? 0.0 : 1.0));
      if (in_box) ++zeros;
    }
  }
  CHECK(zeros == 4);

  // idempotent projection and half 0 identity
  SeededRng rng(34);
  const Tensor x = rng.standard_normal({6, 6});
  CHECK(l2_distance(op.apply(op.apply(x)), op.apply(x)) == 0.0);
  const auto id = DiagonalizableOp::make_box_mask({6, 6}, 0);
  CHECK(l2_distance(id.apply(x), x) == 0.0);

  CHECK_THROWS_AS(DiagonalizableOp::make_box_mask({6, 6}, 4), ParameterError);
}

TEST_CASE("bernoulli mask determinism and missing fraction") {
  const auto a = DiagonalizableOp::make_bernoulli_mask({64, 64}, 0.7, 7);
  const auto b = DiagonalizableOp::make_bernoulli_mask({64, 64}, 0.7, 7);
  CHECK(a.mask_tensor().values() == b.mask_tensor().values());

  const Tensor mask = a.mask_tensor();
  double kept = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) kept += mask[i];
  const double missing = 1.0 - kept / static_cast<double>(mask.size());
  CHECK(std::fabs(missing - 0.7) < 0.05);

  const auto none = DiagonalizableOp::make_bernoulli_mask({8, 8}, 0.0, 3);
  SeededRng rng(35);
  const Tensor x = rng.standard_normal({8, 8});
  CHECK(l2_distance(none.apply(x), x) == 0.0);

  CHECK_THROWS_AS(DiagonalizableOp::make_bernoulli_mask({8, 8}, 1.0, 3), ParameterError);
  CHECK_THROWS_AS(DiagonalizableOp::make_bernoulli_mask({8, 8}, -0.1, 3), ParameterError);
}

TEST_CASE("bernoulli mask shares one mask across channels") {
  const auto op = DiagonalizableOp::make_bernoulli_mask({3, 8, 8}, 0.5, 12);
  const Tensor mask = op.mask_tensor();
  for (std::size_t p = 0; p < 64; ++p) {
    CHECK(mask[p] == mask[64 + p]);
    CHECK(mask[p] == mask[128 + p]);
  }
}

TEST_CASE("prox leaves unobserved pixels at v (lambda = 0)") {
  const auto op = DiagonalizableOp::make_box_mask({6, 6}, 1);
  SeededRng rng(36);
  const Tensor v = rng.standard_normal({6, 6});
  const Tensor y = rng.standard_normal({6, 6});
  const Tensor p = op.prox_data(v, op.apply(y), 3.0);
  for (std::size_t r = 2; r <= 3; ++r) {
    for (std::size_t c = 2; c <= 3; ++c) CHECK(p[r * 6 + c] == doctest::Approx(v[r * 6 + c]).epsilon(1e-14));
  }
}

TEST_CASE("prox parameter validation") {
  const auto op = DiagonalizableOp::make_identity({4});
  const Tensor v = Tensor::zeros({4});
  CHECK_THROWS_AS(op.prox_data(v, v, 0.0), ParameterError);
  CHECK_THROWS_AS(op.prox_data(v, v, -1.0), ParameterError);
  CHECK_THROWS_AS(prox_data_cg(op, v, v, 1.0, 0.0, 10), ParameterError);
}

TEST_CASE("prox optimality: gradient vanishes at the closed-form output") {
  SeededRng rng(37);
  for (const DiagonalizableOp& op : all_ops_16()) {
    const Tensor v = rng.standard_normal(op.input_shape());
    const Tensor y = rng.standard_normal(op.output_shape());
    const double mu = 2.5;
    const Tensor x = op.prox_data(v, y, mu);
    Tensor grad = x - v;
    Tensor data_grad = op.adjoint(op.apply(x) - y);
    data_grad *= mu;
    grad += data_grad;
    CHECK(norm2(grad) <= 1e-8 * (1.0 + norm2(v)));
  }
}

TEST_CASE("closed-form prox agrees with CG on every task operator") {
  SeededRng rng(38);
  for (const DiagonalizableOp& op : all_ops_16()) {
    const Tensor v = rng.standard_normal(op.input_shape());
    const Tensor y = rng.standard_normal(op.output_shape());
    const double mu = 1.7;
    const Tensor closed = op.prox_data(v, y, mu);
    const CgResult cg = prox_data_cg(op, v, y, mu, 1e-12, 500);
    CHECK(l2_distance(closed, cg.x) <= 1e-6);
  }
}

TEST_CASE("CG on identity converges in one iteration") {
  const auto op = DiagonalizableOp::make_identity({5});
  SeededRng rng(39);
  const Tensor v = rng.standard_normal({5});
  const Tensor y = rng.standard_normal({5});
  const CgResult r = prox_data_cg(op, v, y, 2.0, 1e-10, 10);
  CHECK(r.iterations <= 2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(r.x[i] == doctest::Approx((v[i] + 2.0 * y[i]) / 3.0).epsilon(1e-10));
  }
}

TEST_CASE("CG reports non-convergence with the final residual") {
  const auto op = DiagonalizableOp::make_gaussian_blur({8, 8}, 5, 1.0);
  SeededRng rng(40);
  const Tensor v = rng.standard_normal({8, 8});
  const Tensor y = rng.standard_normal({8, 8});
  try {
    prox_data_cg(op, v, y, 5.0, 1e-12, 1);
    CHECK(false);
  } catch (const ConvergenceError& e) {
    CHECK(e.iterations == 1);
    CHECK(e.residual > 1e-12);
  }
}

TEST_CASE("mask export as tensor") {
  const auto op = DiagonalizableOp::make_bernoulli_mask({8, 8}, 0.4, 5);
  const Tensor mask = op.mask_tensor();
  for (std::size_t i = 0; i < mask.size(); ++i) CHECK((mask[i] == 0.0 || mask[i] == 1.0));
  const auto blur = DiagonalizableOp::make_gaussian_blur({8, 8}, 5, 1.0);
  CHECK_THROWS_AS(blur.mask_tensor(), UnsupportedError);
}
