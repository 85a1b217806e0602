#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccnn/error.hpp"
#include "ccnn/guided_filter.hpp"
#include "ccnn/tensor.hpp"

// Evaluation metrics. MSE is on the 0-255 scale; SSIM uses the reference
// configuration (11x11 Gaussian, sigma 1.5, K1 0.01, K2 0.03, L 1) over
// fully-contained windows only.
namespace ccnn::metrics {

template <typename T>
double mse_255(const Tensor<T>& pred, const Tensor<T>& gt) {
  require_same_shape(pred.shape(), gt.shape(), "mse_255");
  double acc = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = 255.0 * (static_cast<double>(pred[k]) - static_cast<double>(gt[k]));
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

// +inf for a perfect match.
inline double psnr(double mse) {
  if (mse < 0.0 || std::isnan(mse)) throw ParamError("psnr: mse must be >= 0, got " + std::to_string(mse));
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

struct SsimEvalParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double range = 1.0;
};

namespace detail {

inline std::vector<double> gaussian_1d(std::size_t n, double sigma) {
  std::vector<double> g(n);
  const double c = 0.5 * static_cast<double>(n - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) - c;
    g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (auto& v : g) v /= sum;
  return g;
}

// Separable 'valid' filtering: output is (h-n+1) x (w-n+1).
inline std::vector<double> filter_valid(const std::vector<double>& img, std::size_t h, std::size_t w,
                                        const std::vector<double>& g) {
  const std::size_t n = g.size(), ow = w - n + 1, oh = h - n + 1;
  std::vector<double> tmp(h * ow), out(oh * ow);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += g[k] * img[y * w + x + k];
      tmp[y * ow + x] = acc;
    }
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += g[k] * tmp[(y + k) * ow + x];
      out[y * ow + x] = acc;
    }
  return out;
}

template <typename T>
Tensor<T> to_grey(const Tensor<T>& img) {
  if (img.n() == 1 && img.c() == 3) return guided::luminance(img);
  if (img.n() == 1 && img.c() == 1) return img;
  throw ConfigError("ssim_eval: expected (1,1,H,W) or (1,3,H,W), got " + img.shape().str());
}

}  // namespace detail

// Mean SSIM; RGB inputs are converted to luminance first.
template <typename T>
double ssim_eval(const Tensor<T>& pred, const Tensor<T>& gt, const SsimEvalParams& p = {}) {
  require_same_shape(pred.shape(), gt.shape(), "ssim_eval");
  const auto x = detail::to_grey(pred), y = detail::to_grey(gt);
  const std::size_t h = x.h(), w = x.w();
  if (h < p.window || w < p.window)
    throw ConfigError("ssim_eval: image " + x.shape().str() + " smaller than the " + std::to_string(p.window) + "px window");
  const double c1 = (p.k1 * p.range) * (p.k1 * p.range), c2 = (p.k2 * p.range) * (p.k2 * p.range);
  const auto g = detail::gaussian_1d(p.window, p.sigma);
  std::vector<double> vx(x.vec().begin(), x.vec().end()), vy(y.vec().begin(), y.vec().end());
  std::vector<double> xx(vx.size()), yy(vx.size()), xy(vx.size());
  for (std::size_t k = 0; k < vx.size(); ++k) {
    xx[k] = vx[k] * vx[k];
    yy[k] = vy[k] * vy[k];
    xy[k] = vx[k] * vy[k];
  }
  const auto mx = detail::filter_valid(vx, h, w, g), my = detail::filter_valid(vy, h, w, g);
  const auto mxx = detail::filter_valid(xx, h, w, g), myy = detail::filter_valid(yy, h, w, g);
  const auto mxy = detail::filter_valid(xy, h, w, g);
  double acc = 0.0;
  for (std::size_t k = 0; k < mx.size(); ++k) {
    const double sx = mxx[k] - mx[k] * mx[k], sy = myy[k] - my[k] * my[k], sxy = mxy[k] - mx[k] * my[k];
    acc += ((2.0 * mx[k] * my[k] + c1) * (2.0 * sxy + c2)) /
           ((mx[k] * mx[k] + my[k] * my[k] + c1) * (sx + sy + c2));
  }
  return acc / static_cast<double>(mx.size());
}

// Fraction of samples with |pred - gt| <= tol (inclusive).
inline double airlight_accuracy(const std::vector<double>& pred, const std::vector<double>& gt, double tol = 0.05) {
  if (pred.size() != gt.size())
    throw ConfigError("airlight_accuracy: " + std::to_string(pred.size()) + " predictions vs " +
                      std::to_string(gt.size()) + " ground-truth values");
  if (!(tol > 0.0)) throw ParamError("airlight_accuracy: tol must be > 0");
  if (pred.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < pred.size(); ++k)
    if (std::abs(pred[k] - gt[k]) <= tol * (1.0 + 1e-9)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

struct ImageMetrics {
  std::string id;
  double mse = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  std::optional<double> airlight_abs_err;
  std::optional<double> runtime_seconds;
};

struct MetricsReport {
  std::vector<ImageMetrics> images;

  struct Aggregate {
    double mse = 0.0;
    double psnr_db = 0.0;           // mean of per-image PSNR
    double psnr_of_mean_mse = 0.0;  // PSNR of the mean MSE
    double ssim = 0.0;
    std::optional<double> airlight_abs_err;
    std::optional<double> airlight_accuracy;
    std::optional<double> runtime_seconds;
  };

  Aggregate aggregate(double airlight_tol = 0.05) const {
    Aggregate a;
    if (images.empty()) return a;
    const double n = static_cast<double>(images.size());
    double air = 0.0, rt = 0.0;
    std::size_t air_n = 0, rt_n = 0, hits = 0;
    for (const auto& m : images) {
      a.mse += m.mse / n;
      a.psnr_db += m.psnr_db / n;
      a.ssim += m.ssim / n;
      if (m.airlight_abs_err) {
        air += *m.airlight_abs_err;
        ++air_n;
        if (*m.airlight_abs_err <= airlight_tol * (1.0 + 1e-9)) ++hits;
      }
      if (m.runtime_seconds) {
        rt += *m.runtime_seconds;
        ++rt_n;
      }
    }
    a.psnr_of_mean_mse = psnr(a.mse);
    if (air_n) {
      a.airlight_abs_err = air / static_cast<double>(air_n);
      a.airlight_accuracy = static_cast<double>(hits) / static_cast<double>(air_n);
    }
    if (rt_n) a.runtime_seconds = rt / static_cast<double>(rt_n);
    return a;
  }
};

// JSON cannot carry infinities; an infinite PSNR is written as the string "inf".
inline nlohmann::json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json report_to_json(const MetricsReport& r, double airlight_tol = 0.05) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& m : r.images) {
    per.push_back({{"id", m.id},
                   {"mse", m.mse},
                   {"psnr_db", number_or_inf(m.psnr_db)},
                   {"ssim", m.ssim},
                   {"airlight_abs_err", optional_number(m.airlight_abs_err)},
                   {"runtime_seconds", optional_number(m.runtime_seconds)}});
  }
  const auto a = r.aggregate(airlight_tol);
  return {{"images", per},
          {"aggregate",
           {{"count", r.images.size()},
            {"mse", a.mse},
            {"psnr_db", number_or_inf(a.psnr_db)},
            {"psnr_of_mean_mse", number_or_inf(a.psnr_of_mean_mse)},
            {"ssim", a.ssim},
            {"airlight_abs_err", optional_number(a.airlight_abs_err)},
            {"airlight_accuracy", optional_number(a.airlight_accuracy)},
            {"airlight_tol", airlight_tol},
            {"runtime_seconds", optional_number(a.runtime_seconds)}}}};
}

}  // namespace ccnn::metrics
