#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "ccnn/box.hpp"
#include "ccnn/error.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn::guided {

struct GuidedFilterParams {
  std::size_t radius = 16;  // 33x33 window
  double eps = 1e-3;

  void validate() const {
    if (radius < 1) throw ParamError("guided filter radius must be >= 1");
    if (!(eps >= 0.0)) throw ParamError("guided filter eps must be >= 0, got " + std::to_string(eps));
  }
};

namespace detail {
inline void require_single_plane(const Shape& s, const char* what) {
  if (s.n != 1 || s.c != 1) throw ConfigError(std::string(what) + ": expected (1,1,H,W), got " + s.str());
}
}  // namespace detail

// Mean over the clipped (2r+1)^2 window, normalized by the in-bounds count.
template <typename T>
Tensor<T> box_filter(const Tensor<T>& img, std::size_t radius) {
  detail::require_single_plane(img.shape(), "box_filter");
  const auto m = box_mean(img.flat(), img.h(), img.w(), radius);
  Tensor<T> out(img.shape());
  std::transform(m.begin(), m.end(), out.vec().begin(), [](double v) { return static_cast<T>(v); });
  return out;
}

// Grey-guide guided filter: per-window linear model a*guide + b fitted to the
// input, then averaged over all windows covering each pixel.
template <typename T>
Tensor<T> guided_filter(const Tensor<T>& guide, const Tensor<T>& input, const GuidedFilterParams& params) {
  params.validate();
  detail::require_single_plane(guide.shape(), "guided_filter guide");
  require_same_shape(guide.shape(), input.shape(), "guided_filter");
  const std::size_t h = guide.h(), w = guide.w(), r = params.radius, n = h * w;

  std::vector<double> gi(n), gp(n), gii(n), gip(n);
  for (std::size_t k = 0; k < n; ++k) {
    gi[k] = guide[k];
    gp[k] = input[k];
    gii[k] = gi[k] * gi[k];
    gip[k] = gi[k] * gp[k];
  }
  const std::span<const double> si(gi), sp(gp), sii(gii), sip(gip);
  const auto mean_i = box_mean(si, h, w, r);
  const auto mean_p = box_mean(sp, h, w, r);
  const auto mean_ii = box_mean(sii, h, w, r);
  const auto mean_ip = box_mean(sip, h, w, r);

  std::vector<double> a(n), b(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double var = mean_ii[k] - mean_i[k] * mean_i[k];
    const double cov = mean_ip[k] - mean_i[k] * mean_p[k];
    const double denom = var + params.eps;
    a[k] = denom > 0.0 ? cov / denom : 0.0;
    b[k] = mean_p[k] - a[k] * mean_i[k];
  }
  const auto mean_a = box_mean(std::span<const double>(a), h, w, r);
  const auto mean_b = box_mean(std::span<const double>(b), h, w, r);

  Tensor<T> out(input.shape());
  for (std::size_t k = 0; k < n; ++k) out[k] = static_cast<T>(mean_a[k] * gi[k] + mean_b[k]);
  return out;
}

// Rec.601 luma of a (1,3,H,W) image.
template <typename T>
Tensor<T> luminance(const Tensor<T>& rgb) {
  if (rgb.n() != 1 || rgb.c() != 3) throw ConfigError("luminance: expected (1,3,H,W), got " + rgb.shape().str());
  Tensor<T> out(1, 1, rgb.h(), rgb.w());
  auto r = rgb.plane(0, 0), g = rgb.plane(0, 1), b = rgb.plane(0, 2);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = static_cast<T>(0.299 * r[k] + 0.587 * g[k] + 0.114 * b[k]);
  return out;
}

// Refines a coarse transmission map with the hazy image's luminance as guide.
template <typename T>
Tensor<T> refine_transmission(const Tensor<T>& hazy_rgb, const Tensor<T>& coarse_t,
                              const GuidedFilterParams& params) {
  const auto guide = luminance(hazy_rgb);
  return clip01(guided_filter(guide, clip01(coarse_t), params));
}

}  // namespace ccnn::guided
