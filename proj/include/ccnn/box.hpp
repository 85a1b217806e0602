#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace ccnn {

// Window sums over (2r+1)x(2r+1) neighbourhoods clipped to the image, via a
// summed-area table accumulated in double. O(h*w) for any radius.
template <typename T>
std::vector<double> box_sum(std::span<const T> img, std::size_t h, std::size_t w, std::size_t r) {
  const std::size_t w1 = w + 1;
  std::vector<double> sat((h + 1) * w1, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    double row = 0.0;
    for (std::size_t x = 0; x < w; ++x) {
      row += static_cast<double>(img[y * w + x]);
      sat[(y + 1) * w1 + x + 1] = sat[y * w1 + x + 1] + row;
    }
  }
  std::vector<double> out(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t y0 = y > r ? y - r : 0, y1 = std::min(h, y + r + 1);
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t x0 = x > r ? x - r : 0, x1 = std::min(w, x + r + 1);
      out[y * w + x] = sat[y1 * w1 + x1] - sat[y0 * w1 + x1] - sat[y1 * w1 + x0] + sat[y0 * w1 + x0];
    }
  }
  return out;
}

// Number of in-bounds pixels in each clipped window.
inline std::vector<double> box_count(std::size_t h, std::size_t w, std::size_t r) {
  std::vector<double> out(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    const double ny = static_cast<double>(std::min(h, y + r + 1) - (y > r ? y - r : 0));
    for (std::size_t x = 0; x < w; ++x) {
      const double nx = static_cast<double>(std::min(w, x + r + 1) - (x > r ? x - r : 0));
      out[y * w + x] = ny * nx;
    }
  }
  return out;
}

template <typename T>
std::vector<double> box_mean(std::span<const T> img, std::size_t h, std::size_t w, std::size_t r) {
  auto s = box_sum(img, h, w, r);
  const auto n = box_count(h, w, r);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] /= n[k];
  return s;
}

}  // namespace ccnn
