#include <gtest/gtest.h>

#include <fstream>

#include "ccnn/network_io.hpp"
#include "test_util.hpp"

using ccnn::NetworkConfig;
namespace fs = std::filesystem;

TEST(WeightIo, RoundTripIsBitExact) {
  testutil::TempDir dir("weights");
  const NetworkConfig cfg;
  auto w = ccnn::init_weights<float>(cfg, 9);
  for (auto& l : w.layers)
    for (auto& b : l.bias) b = 0.123f;
  ccnn::save_weights(w, dir / "w.bin");
  EXPECT_EQ(ccnn::load_weights<float>(dir / "w.bin", cfg), w);
  EXPECT_FALSE(fs::exists(dir / "w.bin.tmp"));
  const auto bytes = testutil::slurp(dir / "w.bin");
  EXPECT_EQ(bytes.substr(0, 4), "CCNN");
  EXPECT_EQ(bytes.size(), 12 + [&] {
    std::size_t s = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      s += 2 + w.names[k].size() + 7 + 1 + 16 + 4 * w.layers[k].kernel.size();
      s += 2 + w.names[k].size() + 5 + 1 + 4 + 4 * w.layers[k].bias.size();
    }
    return s;
  }());
}

TEST(WeightIo, HeaderLayoutIsLittleEndian) {
  testutil::TempDir dir("weights_hdr");
  NetworkConfig cfg;
  cfg.trunk_depth = 1;
  ccnn::save_weights(ccnn::init_weights<float>(cfg, 1), dir / "w.bin");
  const auto b = testutil::slurp(dir / "w.bin");
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 1u);  // version
  EXPECT_EQ(b[5], 0);
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 2u * (1 + 4 + 7));  // tensor count
  EXPECT_EQ(static_cast<unsigned char>(b[12]), std::string("trunk.0.kernel").size());
  EXPECT_EQ(b.substr(14, 14), "trunk.0.kernel");
  EXPECT_EQ(static_cast<unsigned char>(b[28]), 4u);  // rank
}

TEST(WeightIo, WiderConfigNamesFirstOffendingLayer) {
  testutil::TempDir dir("weights_fn");
  const NetworkConfig fn16;
  NetworkConfig fn32;
  fn32.trunk_filters = 32;
  ccnn::save_weights(ccnn::init_weights<float>(fn16, 1), dir / "w.bin");
  try {
    ccnn::load_weights<float>(dir / "w.bin", fn32);
    FAIL() << "expected DimMismatchError";
  } catch (const ccnn::DimMismatchError& e) {
    EXPECT_EQ(e.layer(), "trunk.0");
    EXPECT_NE(std::string(e.what()).find("trunk.0"), std::string::npos);
  }
}

TEST(WeightIo, TruncatedFileRaisesTruncation) {
  testutil::TempDir dir("weights_trunc");
  const NetworkConfig cfg;
  ccnn::save_weights(ccnn::init_weights<float>(cfg, 1), dir / "w.bin");
  const auto bytes = testutil::slurp(dir / "w.bin");
  for (std::size_t cut : {bytes.size() / 2, bytes.size() - 1, std::size_t{10}, std::size_t{2}}) {
    std::ofstream(dir / "t.bin", std::ios::binary) << bytes.substr(0, cut);
    EXPECT_THROW(ccnn::load_weights<float>(dir / "t.bin", cfg), ccnn::TruncatedError) << cut;
  }
}

TEST(WeightIo, BadMagicVersionAndTrailingBytes) {
  testutil::TempDir dir("weights_bad");
  const NetworkConfig cfg;
  ccnn::save_weights(ccnn::init_weights<float>(cfg, 1), dir / "w.bin");
  auto bytes = testutil::slurp(dir / "w.bin");
  auto put = [&](const std::string& b) { std::ofstream(dir / "x.bin", std::ios::binary) << b; };
  auto bad = bytes;
  bad[0] = 'X';
  put(bad);
  EXPECT_THROW(ccnn::load_weights<float>(dir / "x.bin", cfg), ccnn::FormatError);
  bad = bytes;
  bad[4] = 2;
  put(bad);
  EXPECT_THROW(ccnn::load_weights<float>(dir / "x.bin", cfg), ccnn::FormatError);
  put(bytes + "z");
  EXPECT_THROW(ccnn::load_weights<float>(dir / "x.bin", cfg), ccnn::FormatError);
  EXPECT_THROW(ccnn::load_weights<float>(dir / "missing.bin", cfg), ccnn::IoError);
}

TEST(WeightIo, ExtraLayerInFileRejected) {
  testutil::TempDir dir("weights_extra");
  NetworkConfig deep;
  deep.trunk_depth = 5;
  ccnn::save_weights(ccnn::init_weights<float>(deep, 1), dir / "w.bin");
  try {
    ccnn::load_weights<float>(dir / "w.bin", NetworkConfig{});
    FAIL();
  } catch (const ccnn::DimMismatchError& e) {
    EXPECT_EQ(e.layer(), "trunk.4");
  }
}

TEST(ConfigJson, RoundTripDefaultsAndUnknownKeys) {
  NetworkConfig c;
  c.trunk_filters = 32;
  c.init_std = 0.05;
  EXPECT_EQ(ccnn::config_from_json(ccnn::config_to_json(c)), c);
  EXPECT_EQ(ccnn::config_from_json(nlohmann::json::object()), NetworkConfig{});
  EXPECT_EQ(ccnn::config_from_json({{"trunk_filters", 32}}).trunk_filters, 32u);
  EXPECT_THROW(ccnn::config_from_json({{"filters", 32}}), ccnn::ConfigError);
  EXPECT_THROW(ccnn::config_from_json({{"kernel_size", 4}}), ccnn::ConfigError);
  EXPECT_THROW(ccnn::config_from_json({{"trunk_depth", -1}}), ccnn::ConfigError);
  testutil::TempDir dir("config");
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(ccnn::load_config(dir / "bad.json"), ccnn::FormatError);
}
