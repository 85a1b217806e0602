#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccnn/error.hpp"
#include "ccnn/network.hpp"

namespace ccnn {

// Weight file layout (all integers little-endian):
//   "CCNN" | u32 version | u32 tensor count |
//   per tensor: u16 name length, name bytes, u8 rank, rank x u32 dims,
//               prod(dims) x f32 payload.
// Each layer contributes "<layer>.kernel" (rank 4) and "<layer>.bias" (rank 1).
inline constexpr char kWeightMagic[4] = {'C', 'C', 'N', 'N'};
inline constexpr std::uint32_t kWeightVersion = 1;

namespace detail {

class ByteWriter {
public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { uint(v, 2); }
  void u32(std::uint32_t v) { uint(v, 4); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  const std::vector<char>& buffer() const { return buf_; }

private:
  void uint(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::vector<char> buf_;
};

class ByteReader {
public:
  ByteReader(const std::vector<char>& buf, std::string path) : buf_(buf), path_(std::move(path)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(uint(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(uint(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) {
      throw TruncatedError("weight file '" + path_ + "' is truncated at byte " + std::to_string(buf_.size()));
    }
  }
  bool at_end() const { return pos_ == buf_.size(); }

private:
  std::uint64_t uint(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::vector<char>& buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

inline void write_tensor(ByteWriter& out, const std::string& name, const std::vector<std::uint32_t>& dims,
                         const auto& values) {
  out.u16(static_cast<std::uint16_t>(name.size()));
  out.bytes(name.data(), name.size());
  out.u8(static_cast<std::uint8_t>(dims.size()));
  for (auto d : dims) out.u32(d);
  for (auto v : values) out.f32(static_cast<float>(v));
}

// Writes to a sibling temp file and renames, so a failed write leaves nothing.
inline void write_file_atomic(const std::filesystem::path& path, const std::vector<char>& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + tmp.string() + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
      f.close();
      std::filesystem::remove(tmp);
      throw IoError("failed writing '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace detail

template <typename T>
void save_weights(const WeightStore<T>& store, const std::filesystem::path& path) {
  detail::ByteWriter out;
  out.bytes(kWeightMagic, 4);
  out.u32(kWeightVersion);
  out.u32(static_cast<std::uint32_t>(2 * store.size()));
  for (std::size_t k = 0; k < store.size(); ++k) {
    const auto& l = store.layers[k];
    const auto& s = l.kernel.shape();
    detail::write_tensor(out, store.names[k] + ".kernel",
                         {static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c),
                          static_cast<std::uint32_t>(s.h), static_cast<std::uint32_t>(s.w)},
                         l.kernel.vec());
    detail::write_tensor(out, store.names[k] + ".bias", {static_cast<std::uint32_t>(l.bias.size())}, l.bias);
  }
  detail::write_file_atomic(path, out.buffer());
}

// Parses the whole file before building anything; throws FormatError,
// TruncatedError or DimMismatchError (first offending layer).
template <typename T = float>
WeightStore<T> load_weights(const std::filesystem::path& path, const NetworkConfig& cfg) {
  const auto bytes = detail::read_file(path);
  detail::ByteReader in(bytes, path.string());
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kWeightMagic, 4) != 0) {
    if (bytes.size() < 4) in.need(4);
    throw FormatError("'" + path.string() + "' is not a CCNN weight file (bad magic)");
  }
  in.str(4);
  const auto version = in.u32();
  if (version != kWeightVersion) {
    throw FormatError("'" + path.string() + "' has unsupported weight format version " + std::to_string(version));
  }
  const auto count = in.u32();
  std::map<std::string, detail::RawTensor> tensors;
  std::vector<std::string> order;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name = in.str(in.u16());
    detail::RawTensor raw;
    const auto rank = in.u8();
    std::size_t total = 1;
    for (std::uint8_t r = 0; r < rank; ++r) {
      raw.dims.push_back(in.u32());
      // Dims beyond the file size can only mean a corrupt or truncated file.
      if (raw.dims.back() != 0 && total > bytes.size() / raw.dims.back())
        throw TruncatedError("'" + path.string() + "': tensor '" + name + "' larger than the file");
      total *= raw.dims.back();
    }
    in.need(total * 4);
    raw.data.resize(total);
    for (auto& v : raw.data) v = in.f32();
    order.push_back(name);
    tensors.emplace(name, std::move(raw));
  }
  if (!in.at_end()) throw FormatError("'" + path.string() + "' has trailing bytes after the last tensor");

  const Topology topo(cfg);
  const std::size_t f = cfg.kernel_size;
  WeightStore<T> store;
  for (const auto& spec : topo.specs()) {
    auto kit = tensors.find(spec.name + ".kernel");
    auto bit = tensors.find(spec.name + ".bias");
    if (kit == tensors.end() || bit == tensors.end()) {
      throw DimMismatchError(spec.name, "weight file has no tensors for layer '" + spec.name + "'");
    }
    const std::vector<std::uint32_t> want_k{static_cast<std::uint32_t>(spec.out_channels),
                                            static_cast<std::uint32_t>(spec.in_channels),
                                            static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(f)};
    const std::vector<std::uint32_t> want_b{static_cast<std::uint32_t>(spec.out_channels)};
    if (kit->second.dims != want_k || bit->second.dims != want_b) {
      std::string got;
      for (auto d : kit->second.dims) got += (got.empty() ? "" : "x") + std::to_string(d);
      throw DimMismatchError(spec.name, "layer '" + spec.name + "' dim mismatch: file kernel " + got +
                                            ", config expects " + Shape{spec.out_channels, spec.in_channels, f, f}.str());
    }
    Tensor<T> kernel(Shape{spec.out_channels, spec.in_channels, f, f},
                     std::vector<T>(kit->second.data.begin(), kit->second.data.end()));
    store.names.push_back(spec.name);
    store.layers.emplace_back(std::move(kernel), std::vector<T>(bit->second.data.begin(), bit->second.data.end()));
  }
  if (tensors.size() != 2 * topo.size()) {
    for (const auto& name : order) {
      const auto layer = name.substr(0, name.rfind('.'));
      bool known = false;
      for (const auto& spec : topo.specs()) known = known || spec.name == layer;
      if (!known) throw DimMismatchError(layer, "weight file has layer '" + layer + "' not present in config");
    }
  }
  return store;
}

// ---- NetworkConfig <-> JSON ----

inline nlohmann::json config_to_json(const NetworkConfig& c) {
  return {{"trunk_depth", c.trunk_depth},         {"trunk_filters", c.trunk_filters},
          {"kernel_size", c.kernel_size},         {"airlight_depth", c.airlight_depth},
          {"airlight_filters", c.airlight_filters}, {"trans_block_size", c.trans_block_size},
          {"concat_blocks", c.concat_blocks},     {"init_std", c.init_std}};
}

// Missing keys keep their defaults; unknown keys are rejected.
inline NetworkConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("network config must be a JSON object");
  NetworkConfig c;
  const std::map<std::string, std::size_t*> ints{{"trunk_depth", &c.trunk_depth},
                                                 {"trunk_filters", &c.trunk_filters},
                                                 {"kernel_size", &c.kernel_size},
                                                 {"airlight_depth", &c.airlight_depth},
                                                 {"airlight_filters", &c.airlight_filters},
                                                 {"trans_block_size", &c.trans_block_size},
                                                 {"concat_blocks", &c.concat_blocks}};
  for (const auto& [key, value] : j.items()) {
    if (key == "init_std") {
      if (!value.is_number()) throw ConfigError("config field 'init_std' must be a number");
      c.init_std = value.get<double>();
    } else if (auto it = ints.find(key); it != ints.end()) {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0) throw ConfigError("config field '" + key + "' must be a non-negative integer");
      *it->second = value.get<std::size_t>();
    } else {
      throw ConfigError("unknown network config field '" + key + "'");
    }
  }
  c.validate();
  return c;
}

inline NetworkConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config '" + path.string() + "'");
  try {
    return config_from_json(nlohmann::json::parse(f));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("config '" + path.string() + "': " + e.what());
  }
}

}  // namespace ccnn
