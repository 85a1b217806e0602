#include <gtest/gtest.h>

#include "ccnn/layers.hpp"
#include "ccnn/verify.hpp"
#include "test_util.hpp"

using ccnn::Shape;
using ccnn::Tensor;
using testutil::random_tensor;

TEST(Relu, ClampsNegativesAndZero) {
  const Tensor<double> x(Shape{1, 1, 1, 3}, {-1.0, 0.0, 2.0});
  EXPECT_EQ(ccnn::relu(x).vec(), (std::vector<double>{0.0, 0.0, 2.0}));
}

TEST(Relu, PositiveInputUnchanged) {
  ccnn::Rng rng(1);
  const auto x = random_tensor(rng, {2, 3, 4, 4}, 0.01, 1.0);
  EXPECT_EQ(ccnn::relu(x), x);
}

TEST(Relu, BackwardMasksNonPositive) {
  const Tensor<double> x(Shape{1, 1, 1, 3}, {-1.0, 2.0, 0.0});
  const Tensor<double> g(Shape{1, 1, 1, 3}, {5.0, 5.0, 5.0});
  EXPECT_EQ(ccnn::relu_backward(x, g).vec(), (std::vector<double>{0.0, 5.0, 0.0}));
}

TEST(Relu, GradientMatchesFiniteDifferences) {
  ccnn::Rng rng(2);
  auto x = random_tensor(rng, {2, 4, 8, 8});
  for (auto& v : x.vec())
    if (std::abs(v) < 1e-3) v = 0.5;
  const auto g = random_tensor(rng, x.shape());
  const auto a = ccnn::relu_backward(x, g);
  const auto gc = ccnn::verify::finite_difference_check(
      x.flat(), a.flat(), [&] { return ccnn::verify::dot(g.flat(), ccnn::relu(x).flat()); });
  EXPECT_LE(gc.worst, 1e-4);
}

TEST(Concat, ThreeSixteenChannelMapsGiveFortyEight) {
  const Tensor<float> a(1, 16, 5, 5, 1.f), b(1, 16, 5, 5, 2.f), c(1, 16, 5, 5, 3.f);
  const auto y = ccnn::concat_channels(std::vector<Tensor<float>>{a, b, c});
  EXPECT_EQ(y.shape(), (Shape{1, 48, 5, 5}));
  EXPECT_EQ(y(0, 0, 0, 0), 1.f);
  EXPECT_EQ(y(0, 16, 2, 2), 2.f);
  EXPECT_EQ(y(0, 47, 4, 4), 3.f);
}

TEST(Concat, SingleInputIsIdentity) {
  ccnn::Rng rng(3);
  const auto x = random_tensor(rng, {2, 3, 4, 5});
  EXPECT_EQ(ccnn::concat_channels(std::vector<Tensor<double>>{x}), x);
}

TEST(Concat, SplitSlicesGradient) {
  ccnn::Rng rng(4);
  const auto g = random_tensor(rng, {2, 32, 3, 3});
  const auto parts = ccnn::split_channels(g, {16, 16});
  ASSERT_EQ(parts.size(), 2u);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 16; ++c)
      for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 3; ++x) {
          EXPECT_EQ(parts[0](n, c, y, x), g(n, c, y, x));
          EXPECT_EQ(parts[1](n, c, y, x), g(n, c + 16, y, x));
        }
}

TEST(Concat, ConcatThenSplitIsIdentity) {
  ccnn::Rng rng(5);
  const auto a = random_tensor(rng, {2, 3, 4, 4}), b = random_tensor(rng, {2, 5, 4, 4}), c = random_tensor(rng, {2, 1, 4, 4});
  const auto parts = ccnn::split_channels(ccnn::concat_channels(std::vector<Tensor<double>>{a, b, c}), {3, 5, 1});
  EXPECT_EQ(parts[0], a);
  EXPECT_EQ(parts[1], b);
  EXPECT_EQ(parts[2], c);
}

TEST(Concat, RejectsMismatchedInputs) {
  const Tensor<double> a(1, 2, 4, 4), b(1, 2, 4, 5), c(2, 2, 4, 4);
  EXPECT_THROW(ccnn::concat_channels(std::vector<Tensor<double>>{a, b}), ccnn::ConfigError);
  EXPECT_THROW(ccnn::concat_channels(std::vector<Tensor<double>>{a, c}), ccnn::ConfigError);
  EXPECT_THROW(ccnn::split_channels(a, {1, 2}), ccnn::ConfigError);
}

TEST(Concat, GradientMatchesFiniteDifferences) {
  const auto r = ccnn::verify::check_concat_gradient({});
  EXPECT_TRUE(r.passed) << r.value;
}
