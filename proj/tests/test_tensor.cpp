#include <gtest/gtest.h>

#include "ccnn/error.hpp"
#include "ccnn/tensor.hpp"

using ccnn::Shape;
using ccnn::Tensor;

TEST(Tensor, LayoutIsRowMajorNCHW) {
  Tensor<double> t(2, 3, 4, 5);
  EXPECT_EQ(t.size(), 2u * 3 * 4 * 5);
  t(1, 2, 3, 4) = 7.0;
  EXPECT_EQ(t[((1 * 3 + 2) * 4 + 3) * 5 + 4], 7.0);
  EXPECT_EQ(t.plane(1, 2).size(), 20u);
  EXPECT_EQ(t.plane(1, 2)[19], 7.0);
  EXPECT_EQ(t.sample_span(1).size(), 60u);
}

TEST(Tensor, RejectsZeroDims) {
  EXPECT_THROW(Tensor<float>(0, 1, 1, 1), ccnn::ConfigError);
  EXPECT_THROW(Tensor<float>(1, 1, 0, 1), ccnn::ConfigError);
  EXPECT_THROW(Tensor<float>(Shape{1, 1, 2, 2}, std::vector<float>(3)), ccnn::ConfigError);
}

TEST(Tensor, SampleCopiesOneBatchEntry) {
  Tensor<double> t(2, 1, 2, 2);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(k);
  const auto s = t.sample(1);
  EXPECT_EQ(s.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_EQ(s[0], 4.0);
  EXPECT_EQ(s[3], 7.0);
}

TEST(Tensor, CastAndClip) {
  Tensor<double> t(Shape{1, 1, 1, 3}, std::vector<double>{-0.5, 0.25, 1.5});
  const auto c = ccnn::clip01(t);
  EXPECT_EQ(c.vec(), (std::vector<double>{0.0, 0.25, 1.0}));
  EXPECT_EQ(t.cast<float>()[1], 0.25f);
}

TEST(Tensor, RequireSameShapeNamesBoth) {
  try {
    ccnn::require_same_shape(Shape{1, 1, 2, 2}, Shape{1, 1, 2, 3}, "op");
    FAIL();
  } catch (const ccnn::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("(1,1,2,3)"), std::string::npos);
  }
}
