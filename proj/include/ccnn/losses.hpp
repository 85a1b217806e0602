#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ccnn/box.hpp"
#include "ccnn/error.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn::losses {

// Training-side SSIM: uniform 13x13 window, constants used as given.
struct SsimParams {
  std::size_t radius = 6;
  double c1 = 0.02;
  double c2 = 0.03;

  std::size_t window() const { return 2 * radius + 1; }
  void validate() const {
    if (!(c1 > 0.0 && c2 > 0.0)) throw ParamError("SSIM constants must be positive");
  }
};

template <typename T>
struct LossResult {
  double value = 0.0;
  Tensor<T> grad;  // d value / d pred
};

namespace detail {

// Window moments for one plane pair. Borders use only in-bounds pixels.
struct SsimMoments {
  std::vector<double> n, mx, my, mxx, myy, mxy;
};

template <typename T>
SsimMoments ssim_moments(std::span<const T> x, std::span<const T> y, std::size_t h, std::size_t w,
                         std::size_t r) {
  const std::size_t sz = h * w;
  std::vector<double> xx(sz), yy(sz), xy(sz);
  for (std::size_t k = 0; k < sz; ++k) {
    const double a = x[k], b = y[k];
    xx[k] = a * a;
    yy[k] = b * b;
    xy[k] = a * b;
  }
  SsimMoments m;
  m.n = box_count(h, w, r);
  m.mx = box_sum(x, h, w, r);
  m.my = box_sum(y, h, w, r);
  m.mxx = box_sum(std::span<const double>(xx), h, w, r);
  m.myy = box_sum(std::span<const double>(yy), h, w, r);
  m.mxy = box_sum(std::span<const double>(xy), h, w, r);
  for (std::size_t k = 0; k < sz; ++k) {
    const double inv = 1.0 / m.n[k];
    m.mx[k] *= inv;
    m.my[k] *= inv;
    m.mxx[k] *= inv;
    m.myy[k] *= inv;
    m.mxy[k] *= inv;
  }
  return m;
}

struct SsimTerms {
  double a1, b1, a2, b2;
};

inline SsimTerms ssim_terms(const SsimMoments& m, std::size_t k, const SsimParams& p) {
  const double mx = m.mx[k], my = m.my[k];
  const double vx = m.mxx[k] - mx * mx;
  const double vy = m.myy[k] - my * my;
  const double cxy = m.mxy[k] - mx * my;
  return {2.0 * mx * my + p.c1, mx * mx + my * my + p.c1, 2.0 * cxy + p.c2, vx + vy + p.c2};
}

}  // namespace detail

// Per-pixel SSIM of two (1,1,H,W) maps.
template <typename T>
Tensor<T> ssim_map(const Tensor<T>& pred, const Tensor<T>& target, const SsimParams& params = {}) {
  params.validate();
  require_same_shape(pred.shape(), target.shape(), "ssim_map");
  Tensor<T> out(pred.shape());
  const std::size_t h = pred.h(), w = pred.w();
  for (std::size_t s = 0; s < pred.n(); ++s)
    for (std::size_t ch = 0; ch < pred.c(); ++ch) {
      const auto m = detail::ssim_moments(pred.plane(s, ch), target.plane(s, ch), h, w, params.radius);
      auto o = out.plane(s, ch);
      for (std::size_t k = 0; k < o.size(); ++k) {
        const auto t = detail::ssim_terms(m, k, params);
        o[k] = static_cast<T>((t.a1 / t.b1) * (t.a2 / t.b2));
      }
    }
  return out;
}

// L = (1/N) sum_i (1 - mean_p SSIM_i(p)) over a (N,1,H,W) batch, with its
// analytic gradient. Every window moment is linear in pred or pred^2, so the
// chain rule through the box sums is another box sum (windows are symmetric).
template <typename T>
LossResult<T> ssim_loss(const Tensor<T>& pred, const Tensor<T>& target, const SsimParams& params = {}) {
  params.validate();
  require_same_shape(pred.shape(), target.shape(), "ssim_loss");
  const std::size_t h = pred.h(), w = pred.w(), m_px = h * w;
  const double planes = static_cast<double>(pred.n() * pred.c());
  const double scale = 1.0 / (planes * static_cast<double>(m_px));

  LossResult<T> res{0.0, Tensor<T>(pred.shape())};
  std::vector<double> alpha(m_px), beta(m_px), gamma(m_px);
  for (std::size_t s = 0; s < pred.n(); ++s)
    for (std::size_t ch = 0; ch < pred.c(); ++ch) {
      const auto x = pred.plane(s, ch);
      const auto y = target.plane(s, ch);
      const auto m = detail::ssim_moments(x, y, h, w, params.radius);
      double ssim_sum = 0.0;
      for (std::size_t k = 0; k < m_px; ++k) {
        const auto t = detail::ssim_terms(m, k, params);
        const double lum = t.a1 / t.b1, con = t.a2 / t.b2;
        ssim_sum += lum * con;
        const double mx = m.mx[k], my = m.my[k];
        const double dlum = (2.0 * my * t.b1 - 2.0 * mx * t.a1) / (t.b1 * t.b1);
        const double dcon = (2.0 * mx * t.a2 - 2.0 * my * t.b2) / (t.b2 * t.b2);
        const double inv_n = 1.0 / m.n[k];
        alpha[k] = (dlum * con + lum * dcon) * inv_n;
        beta[k] = -lum * t.a2 / (t.b2 * t.b2) * inv_n;
        gamma[k] = lum * 2.0 / t.b2 * inv_n;
      }
      res.value += 1.0 - ssim_sum / static_cast<double>(m_px);

      const auto sa = box_sum(std::span<const double>(alpha), h, w, params.radius);
      const auto sb = box_sum(std::span<const double>(beta), h, w, params.radius);
      const auto sg = box_sum(std::span<const double>(gamma), h, w, params.radius);
      auto g = res.grad.plane(s, ch);
      for (std::size_t k = 0; k < m_px; ++k) {
        const double d = sa[k] + 2.0 * static_cast<double>(x[k]) * sb[k] + static_cast<double>(y[k]) * sg[k];
        g[k] = static_cast<T>(-scale * d);
      }
    }
  res.value /= planes;
  return res;
}

// Mean squared error over every element, with gradient 2(pred - target)/size.
template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  require_same_shape(pred.shape(), target.shape(), "mse_loss");
  const double inv = 1.0 / static_cast<double>(pred.size());
  LossResult<T> res{0.0, Tensor<T>(pred.shape())};
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = static_cast<double>(pred[k]) - static_cast<double>(target[k]);
    res.value += d * d;
    res.grad[k] = static_cast<T>(2.0 * d * inv);
  }
  res.value *= inv;
  return res;
}

inline double total_loss(double ssim_part, double mse_part) {
  if (!std::isfinite(ssim_part) || !std::isfinite(mse_part)) {
    throw NumericError("total_loss: non-finite component (ssim=" + std::to_string(ssim_part) +
                       ", mse=" + std::to_string(mse_part) + ")");
  }
  return ssim_part + mse_part;
}

}  // namespace ccnn::losses
