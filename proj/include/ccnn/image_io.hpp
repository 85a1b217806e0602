#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "ccnn/error.hpp"
#include "ccnn/tensor.hpp"

// Binary netpbm images: P6 (RGB, maxval 255) and P5 (grey, maxval 255 or
// 65535, big-endian samples). Pixel values map to [0,1] as v / maxval.
namespace ccnn::image {

namespace detail {

struct Header {
  std::string magic;
  std::size_t width = 0, height = 0, maxval = 0;
  std::size_t data_offset = 0;
};

inline Header parse_header(const std::vector<unsigned char>& buf, const std::string& path) {
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < buf.size()) {
      if (buf[pos] == '#') {
        while (pos < buf.size() && buf[pos] != '\n') ++pos;
      } else if (std::isspace(buf[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto token = [&] {
    skip_ws();
    std::string t;
    while (pos < buf.size() && !std::isspace(buf[pos]) && buf[pos] != '#') t.push_back(static_cast<char>(buf[pos++]));
    if (t.empty()) throw FormatError("'" + path + "': truncated netpbm header");
    return t;
  };
  auto number = [&] {
    const auto t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      throw FormatError("'" + path + "': bad header field '" + t + "'");
    return static_cast<std::size_t>(std::stoull(t));
  };
  Header h;
  h.magic = token();
  h.width = number();
  h.height = number();
  h.maxval = number();
  if (pos >= buf.size() || !std::isspace(buf[pos])) throw FormatError("'" + path + "': malformed netpbm header");
  h.data_offset = pos + 1;
  if (h.width == 0 || h.height == 0) throw FormatError("'" + path + "': zero image dimension");
  return h;
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open image '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Temp file plus rename, so an interrupted write never leaves a partial image.
inline void write_bytes(const std::filesystem::path& path, const std::string& header,
                        const std::vector<unsigned char>& payload) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    f.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!f) {
      f.close();
      std::filesystem::remove(tmp);
      throw IoError("failed writing '" + path.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

inline unsigned quantize(double v, unsigned maxval) {
  return static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
}

}  // namespace detail

// (1,3,H,W) in [0,1].
template <typename T = float>
Tensor<T> read_ppm(const std::filesystem::path& path) {
  const auto buf = detail::read_bytes(path);
  const auto h = detail::parse_header(buf, path.string());
  if (h.magic != "P6" || h.maxval != 255)
    throw FormatError("'" + path.string() + "': expected P6 with maxval 255, got " + h.magic + " maxval " +
                      std::to_string(h.maxval));
  const std::size_t n = h.width * h.height;
  if (buf.size() - h.data_offset < 3 * n) throw TruncatedError("'" + path.string() + "': truncated pixel data");
  Tensor<T> img(1, 3, h.height, h.width);
  const unsigned char* p = buf.data() + h.data_offset;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t ch = 0; ch < 3; ++ch) img[ch * n + k] = static_cast<T>(p[3 * k + ch] / 255.0);
  return img;
}

// (1,1,H,W) in [0,1].
template <typename T = float>
Tensor<T> read_pgm(const std::filesystem::path& path) {
  const auto buf = detail::read_bytes(path);
  const auto h = detail::parse_header(buf, path.string());
  if (h.magic != "P5" || (h.maxval != 255 && h.maxval != 65535))
    throw FormatError("'" + path.string() + "': expected P5 with maxval 255 or 65535");
  const std::size_t n = h.width * h.height, bps = h.maxval > 255 ? 2 : 1;
  if (buf.size() - h.data_offset < bps * n) throw TruncatedError("'" + path.string() + "': truncated pixel data");
  Tensor<T> img(1, 1, h.height, h.width);
  const unsigned char* p = buf.data() + h.data_offset;
  const double scale = 1.0 / static_cast<double>(h.maxval);
  for (std::size_t k = 0; k < n; ++k) {
    const unsigned v = bps == 2 ? (static_cast<unsigned>(p[2 * k]) << 8) | p[2 * k + 1] : p[k];
    img[k] = static_cast<T>(v * scale);
  }
  return img;
}

template <typename T>
void write_ppm(const std::filesystem::path& path, const Tensor<T>& img) {
  if (img.n() != 1 || img.c() != 3) throw ConfigError("write_ppm: expected (1,3,H,W), got " + img.shape().str());
  const std::size_t n = img.h() * img.w();
  std::vector<unsigned char> payload(3 * n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t ch = 0; ch < 3; ++ch)
      payload[3 * k + ch] = static_cast<unsigned char>(detail::quantize(img[ch * n + k], 255));
  detail::write_bytes(path, "P6\n" + std::to_string(img.w()) + " " + std::to_string(img.h()) + "\n255\n", payload);
}

// 16-bit grey, maxval 65535.
template <typename T>
void write_pgm16(const std::filesystem::path& path, const Tensor<T>& img) {
  if (img.n() != 1 || img.c() != 1) throw ConfigError("write_pgm16: expected (1,1,H,W), got " + img.shape().str());
  const std::size_t n = img.h() * img.w();
  std::vector<unsigned char> payload(2 * n);
  for (std::size_t k = 0; k < n; ++k) {
    const unsigned v = detail::quantize(img[k], 65535);
    payload[2 * k] = static_cast<unsigned char>(v >> 8);
    payload[2 * k + 1] = static_cast<unsigned char>(v & 0xff);
  }
  detail::write_bytes(path, "P5\n" + std::to_string(img.w()) + " " + std::to_string(img.h()) + "\n65535\n", payload);
}

}  // namespace ccnn::image
