#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "ccnn/error.hpp"
#include "ccnn/tensor.hpp"

// Atmospheric scattering model: I = J*t + B*(1 - t), t = exp(-beta*d).
namespace ccnn::scattering {

struct ScatterParams {
  double beta = 1.0;
  double airlight = 1.0;
  double t_floor = 0.1;

  void validate() const {
    if (!(beta > 0.0)) throw ParamError("beta must be > 0, got " + std::to_string(beta));
    if (!(airlight >= 0.0 && airlight <= 1.0))
      throw ParamError("airlight must lie in [0,1], got " + std::to_string(airlight));
    if (!(t_floor > 0.0 && t_floor < 1.0))
      throw ParamError("t_floor must lie in (0,1), got " + std::to_string(t_floor));
  }
};

template <typename T>
Tensor<T> transmission_from_depth(const Tensor<T>& depth, double beta) {
  if (!(beta > 0.0)) throw ParamError("beta must be > 0, got " + std::to_string(beta));
  Tensor<T> t(depth.shape());
  auto d = depth.flat();
  auto o = t.flat();
  for (std::size_t k = 0; k < d.size(); ++k) o[k] = static_cast<T>(std::exp(-beta * static_cast<double>(d[k])));
  return t;
}

namespace detail {
inline void check_rgb_and_map(const Shape& rgb, const Shape& map, const char* what) {
  if (rgb.n != map.n || !rgb.same_spatial(map) || (map.c != 1 && map.c != rgb.c)) {
    throw ConfigError(std::string(what) + ": shape mismatch " + rgb.str() + " vs " + map.str());
  }
}
}  // namespace detail

// t is single-channel (broadcast over color channels) or matches clean.
template <typename T>
Tensor<T> synthesize_hazy(const Tensor<T>& clean, const Tensor<T>& t, double airlight) {
  detail::check_rgb_and_map(clean.shape(), t.shape(), "synthesize_hazy");
  const T b = static_cast<T>(airlight);
  Tensor<T> out(clean.shape());
  for (std::size_t s = 0; s < clean.n(); ++s)
    for (std::size_t ch = 0; ch < clean.c(); ++ch) {
      auto j = clean.plane(s, ch);
      auto tt = t.plane(s, t.c() == 1 ? 0 : ch);
      auto o = out.plane(s, ch);
      for (std::size_t k = 0; k < j.size(); ++k)
        o[k] = std::clamp(j[k] * tt[k] + b * (T(1) - tt[k]), T(0), T(1));
    }
  return out;
}

// J = (I - B) / max(t, t_floor) + B, clipped to [0,1].
template <typename T>
Tensor<T> invert_scattering(const Tensor<T>& hazy, const Tensor<T>& t, double airlight, double t_floor) {
  detail::check_rgb_and_map(hazy.shape(), t.shape(), "invert_scattering");
  const T b = static_cast<T>(airlight);
  const T floor = static_cast<T>(t_floor);
  Tensor<T> out(hazy.shape());
  for (std::size_t s = 0; s < hazy.n(); ++s)
    for (std::size_t ch = 0; ch < hazy.c(); ++ch) {
      auto in = hazy.plane(s, ch);
      auto tt = t.plane(s, t.c() == 1 ? 0 : ch);
      auto o = out.plane(s, ch);
      for (std::size_t k = 0; k < in.size(); ++k)
        o[k] = std::clamp((in[k] - b) / std::max(tt[k], floor) + b, T(0), T(1));
    }
  return out;
}

// Scalar airlight materialized as a constant single-channel map.
template <typename T>
Tensor<T> airlight_map(double airlight, std::size_t h, std::size_t w) {
  return Tensor<T>(1, 1, h, w, static_cast<T>(airlight));
}

}  // namespace ccnn::scattering
