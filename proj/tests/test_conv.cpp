#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ccnn/conv.hpp"
#include "ccnn/verify.hpp"
#include "test_util.hpp"

using ccnn::ConvParams;
using ccnn::Shape;
using ccnn::Tensor;
using testutil::random_tensor;

namespace {

ConvParams<double> identity3(std::size_t ch = 1) {
  auto p = ConvParams<double>::zeros(ch, ch, 3);
  for (std::size_t c = 0; c < ch; ++c) p.kernel(c, c, 1, 1) = 1.0;
  return p;
}

}  // namespace

TEST(Conv, IdentityKernelReproducesInput) {
  ccnn::Rng rng(1);
  const auto x = random_tensor(rng, {1, 1, 3, 3});
  EXPECT_EQ(ccnn::conv2d_forward(x, identity3()), x);
  EXPECT_EQ(ccnn::conv2d_forward_reference(x, identity3()), x);
}

TEST(Conv, OnesKernelOnConstantInputCountsWindow) {
  const Tensor<double> x(1, 1, 5, 5, 2.0);
  ConvParams<double> p(Tensor<double>(1, 1, 3, 3, 1.0), {0.0});
  const auto y = ccnn::conv2d_forward(x, p);
  EXPECT_DOUBLE_EQ(y(0, 0, 2, 2), 18.0);
  EXPECT_DOUBLE_EQ(y(0, 0, 0, 0), 8.0);
  EXPECT_DOUBLE_EQ(y(0, 0, 4, 4), 8.0);
  EXPECT_DOUBLE_EQ(y(0, 0, 0, 2), 12.0);
}

TEST(Conv, ZeroKernelGivesBias) {
  ccnn::Rng rng(2);
  const auto x = random_tensor(rng, {2, 3, 6, 4});
  auto p = ConvParams<double>::zeros(2, 3, 5);
  p.bias = {0.7, 0.7};
  for (double v : testutil::values(ccnn::conv2d_forward(x, p))) EXPECT_DOUBLE_EQ(v, 0.7);
}

TEST(Conv, OutputKeepsSpatialDims) {
  ccnn::Rng rng(3);
  for (std::size_t f : {1u, 3u, 5u, 7u}) {
    const auto x = random_tensor(rng, {2, 3, 9, 4});
    const auto y = ccnn::conv2d_forward(x, ConvParams<double>::zeros(5, 3, f));
    EXPECT_EQ(y.shape(), (Shape{2, 5, 9, 4}));
  }
}

TEST(Conv, IdentityBackwardPassesGradient) {
  ccnn::Rng rng(4);
  const auto x = random_tensor(rng, {1, 1, 4, 5});
  const auto g = random_tensor(rng, {1, 1, 4, 5});
  const auto grads = ccnn::conv2d_backward(x, identity3(), g);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(grads.input[k], g[k], 1e-15);
}

TEST(Conv, BiasGradientIsChannelSum) {
  ccnn::Rng rng(5);
  const auto x = random_tensor(rng, {2, 2, 5, 5});
  ConvParams<double> p(random_tensor(rng, {3, 2, 3, 3}), {0.1, 0.2, 0.3});
  const auto g = random_tensor(rng, {2, 3, 5, 5});
  const auto grads = ccnn::conv2d_backward(x, p, g);
  for (std::size_t k = 0; k < 3; ++k) {
    double s = 0.0;
    for (std::size_t n = 0; n < 2; ++n)
      for (double v : g.plane(n, k)) s += v;
    EXPECT_NEAR(grads.bias[k], s, 1e-12);
  }
}

TEST(Conv, GradientsMatchFiniteDifferences) {
  ccnn::Rng rng(6);
  auto x = random_tensor(rng, {1, 2, 5, 5});
  ConvParams<double> p(random_tensor(rng, {4, 2, 3, 3}), {0.1, -0.2, 0.3, 0.0});
  const auto g = random_tensor(rng, {1, 4, 5, 5});
  const auto grads = ccnn::conv2d_backward(x, p, g);
  auto loss = [&] { return ccnn::verify::dot(g.flat(), ccnn::conv2d_forward(x, p).flat()); };
  EXPECT_LE(ccnn::verify::finite_difference_check(x.flat(), grads.input.flat(), loss).worst, 1e-4);
  EXPECT_LE(ccnn::verify::finite_difference_check(p.kernel.flat(), grads.kernel.flat(), loss).worst, 1e-4);
  EXPECT_LE(ccnn::verify::finite_difference_check(std::span<double>(p.bias), std::span<const double>(grads.bias), loss)
                .worst,
            1e-4);
}

TEST(Conv, RandomShapesUpTo2x4x8x8PassGradientCheck) {
  ccnn::Rng rng(7);
  for (int trial = 0; trial < 8; ++trial) {
    const Shape s{1 + rng.below(2), 1 + rng.below(4), 1 + rng.below(8), 1 + rng.below(8)};
    const std::size_t f = 1 + 2 * rng.below(4), co = 1 + rng.below(4);
    auto x = random_tensor(rng, s);
    auto k = random_tensor(rng, {co, s.c, f, f});
    ConvParams<double> p(std::move(k), std::vector<double>(co, 0.05));
    const auto g = random_tensor(rng, {s.n, co, s.h, s.w});
    const auto grads = ccnn::conv2d_backward(x, p, g);
    auto loss = [&] { return ccnn::verify::dot(g.flat(), ccnn::conv2d_forward(x, p).flat()); };
    EXPECT_LE(ccnn::verify::finite_difference_check(x.flat(), grads.input.flat(), loss).worst, 1e-4);
    EXPECT_LE(ccnn::verify::finite_difference_check(p.kernel.flat(), grads.kernel.flat(), loss).worst, 1e-4);
  }
}

TEST(Conv, LinearInInputWithoutBias) {
  ccnn::Rng rng(8);
  const auto x = random_tensor(rng, {2, 3, 7, 6}), y = random_tensor(rng, {2, 3, 7, 6});
  auto kernel = random_tensor(rng, {4, 3, 3, 3});
  ConvParams<double> p(std::move(kernel), std::vector<double>(4, 0.0));
  const double a = 1.7, b = -0.4;
  Tensor<double> mix(x.shape());
  for (std::size_t k = 0; k < mix.size(); ++k) mix[k] = a * x[k] + b * y[k];
  const auto fm = ccnn::conv2d_forward(mix, p), fx = ccnn::conv2d_forward(x, p), fy = ccnn::conv2d_forward(y, p);
  for (std::size_t k = 0; k < fm.size(); ++k) EXPECT_NEAR(fm[k], a * fx[k] + b * fy[k], 1e-10);
}

// Float results against a double reference on the same (float-representable)
// inputs, bounded by the worst-case accumulation error (n + 2) u sum|terms|.
TEST(Conv, FastPathWithinFloatAccumulationBound) {
  ccnn::Rng rng(9);
  const double u = std::ldexp(1.0, -24);
  auto abs_of = [](Tensor<double> t) {
    for (auto& v : t.vec()) v = std::abs(v);
    return t;
  };
  auto check = [&](std::span<const float> got, std::span<const double> exact, std::span<const double> mag,
                   std::size_t n, const char* what) {
    for (std::size_t k = 0; k < got.size(); ++k)
      ASSERT_LE(std::abs(double(got[k]) - exact[k]), (n + 2) * u * mag[k] + 1e-30) << what << " @" << k;
  };
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t f = 1 + 2 * rng.below(4);
    const Shape s{1 + rng.below(2), 1 + rng.below(16), 1 + rng.below(20), 1 + rng.below(20)};
    const std::size_t co = 1 + rng.below(16);
    const auto xd = random_tensor(rng, s).cast<float>().cast<double>();
    const auto kd = random_tensor(rng, {co, s.c, f, f}).cast<float>().cast<double>();
    const auto gd = random_tensor(rng, {s.n, co, s.h, s.w}).cast<float>().cast<double>();
    const std::vector<double> bias(co, double(0.1f));
    ConvParams<double> pd(Tensor<double>(kd), bias);
    ConvParams<double> pa(abs_of(kd), bias);
    ConvParams<float> pf(kd.cast<float>(), std::vector<float>(co, 0.1f));
    const auto x = xd.cast<float>();
    const auto g = gd.cast<float>();

    const std::size_t n = std::max({s.c * f * f + 1, co * f * f, s.n * s.h * s.w});
    check(ccnn::conv2d_forward(x, pf).flat(), ccnn::conv2d_forward_reference(xd, pd).flat(),
          ccnn::conv2d_forward_reference(abs_of(xd), pa).flat(), n, "forward");
    const auto bf = ccnn::conv2d_backward(x, pf, g);
    const auto exact = ccnn::conv2d_backward_reference(xd, pd, gd);
    const auto mag = ccnn::conv2d_backward_reference(abs_of(xd), pa, abs_of(gd));
    check(bf.input.flat(), exact.input.flat(), mag.input.flat(), n, "input grad");
    check(bf.kernel.flat(), exact.kernel.flat(), mag.kernel.flat(), n, "kernel grad");
    check(bf.bias, exact.bias, mag.bias, n, "bias grad");
  }
}

TEST(Conv, RejectsBadParams) {
  EXPECT_THROW(ConvParams<double>(Tensor<double>(1, 1, 2, 2), {0.0}), ccnn::ConfigError);
  EXPECT_THROW(ConvParams<double>(Tensor<double>(2, 1, 3, 3), {0.0}), ccnn::ConfigError);
  const Tensor<double> x(1, 2, 4, 4);
  EXPECT_THROW(ccnn::conv2d_forward(x, ConvParams<double>::zeros(1, 3, 3)), ccnn::ConfigError);
}
