#include <gtest/gtest.h>

#include <limits>

#include "ccnn/train.hpp"
#include "test_util.hpp"

using ccnn::Tensor;

namespace {

ccnn::NetworkConfig small_config() {
  ccnn::NetworkConfig c;
  c.trunk_depth = 2;
  c.trunk_filters = 4;
  c.airlight_depth = 2;
  c.airlight_filters = 4;
  c.trans_block_size = 2;
  c.concat_blocks = 2;
  c.init_std = 0.1;
  return c;
}

std::vector<ccnn::TrainSample<float>> make_set(std::size_t count, std::uint64_t seed) {
  ccnn::Rng rng(seed);
  std::vector<ccnn::TrainSample<float>> set;
  for (std::size_t i = 0; i < count; ++i) {
    ccnn::TrainSample<float> s{"s" + std::to_string(i), Tensor<float>(1, 3, 8, 8), Tensor<float>(1, 1, 8, 8),
                               rng.uniform(0.7, 1.0)};
    for (auto& v : s.hazy.vec()) v = static_cast<float>(rng.uniform());
    for (auto& v : s.transmission.vec()) v = static_cast<float>(rng.uniform(0.2, 1.0));
    set.push_back(std::move(s));
  }
  return set;
}

}  // namespace

TEST(Train, StepCountFollowsBatching) {
  const auto tr = make_set(64, 1), val = make_set(4, 2);
  ccnn::TrainHyper hp;
  hp.batch = 32;
  hp.epochs = 1;
  auto res = ccnn::train(tr, val, small_config(), hp);
  for (const auto& s : res.kernel_state) EXPECT_EQ(s.step, 2u);
  for (const auto& s : res.bias_state) EXPECT_EQ(s.step, 2u);
  ASSERT_EQ(res.history.epochs.size(), 1u);

  hp.batch = 30;  // trailing partial batch is kept
  hp.epochs = 2;
  res = ccnn::train(tr, val, small_config(), hp);
  EXPECT_EQ(res.kernel_state.front().step, 6u);
}

TEST(Train, DeterministicAndThreadIndependent) {
  const auto tr = make_set(12, 3), val = make_set(3, 4);
  ccnn::TrainHyper hp;
  hp.batch = 5;
  hp.epochs = 3;
  hp.seed = 17;
  const auto a = ccnn::train(tr, val, small_config(), hp);
  const auto b = ccnn::train(tr, val, small_config(), hp);
  hp.threads = 3;
  const auto c = ccnn::train(tr, val, small_config(), hp);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.weights, c.weights);
  for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
    EXPECT_EQ(a.history.epochs[e].train_loss, c.history.epochs[e].train_loss);
    EXPECT_EQ(a.history.epochs[e].val.total, c.history.epochs[e].val.total);
  }
  hp.seed = 18;
  EXPECT_NE(ccnn::train(tr, val, small_config(), hp).weights, a.weights);
}

TEST(Train, ReducesLossOnTinySet) {
  const auto tr = make_set(8, 5);
  ccnn::TrainHyper hp;
  hp.batch = 8;
  hp.epochs = 60;
  hp.adam.lr = 1e-2;
  const auto res = ccnn::train(tr, tr, small_config(), hp);
  EXPECT_LT(res.history.epochs.back().val.total, 0.5 * res.history.initial_val.total);
}

TEST(Train, EvaluateMatchesPerSampleMean) {
  const auto set = make_set(5, 6);
  const auto w = ccnn::init_weights<float>(small_config(), 2);
  const auto all = ccnn::evaluate_loss(set, w, small_config());
  double ssim = 0.0, mse = 0.0;
  for (const auto& s : set) {
    const auto l = ccnn::evaluate_loss(std::vector<ccnn::TrainSample<float>>{s}, w, small_config());
    ssim += l.ssim / 5.0;
    mse += l.mse / 5.0;
  }
  EXPECT_NEAR(all.ssim, ssim, 1e-12);
  EXPECT_NEAR(all.mse, mse, 1e-12);
  EXPECT_DOUBLE_EQ(all.total, all.ssim + all.mse);
}

TEST(Train, AbortsOnNonFiniteLoss) {
  auto tr = make_set(4, 7);
  const auto val = make_set(2, 8);
  tr[2].hazy[5] = std::numeric_limits<float>::quiet_NaN();
  ccnn::TrainHyper hp;
  hp.batch = 4;
  EXPECT_THROW(ccnn::train(tr, val, small_config(), hp), ccnn::NumericError);
}

TEST(Train, RejectsBadInputs) {
  const auto set = make_set(3, 9);
  ccnn::TrainHyper hp;
  EXPECT_THROW(ccnn::train({}, set, small_config(), hp), ccnn::ConfigError);
  hp.batch = 0;
  EXPECT_THROW(ccnn::train(set, set, small_config(), hp), ccnn::ParamError);
  hp.batch = 2;
  auto odd = set;
  odd[1].hazy = Tensor<float>(1, 3, 8, 9);
  EXPECT_THROW(ccnn::train(odd, set, small_config(), hp), ccnn::ConfigError);
}
