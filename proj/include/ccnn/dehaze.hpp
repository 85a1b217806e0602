#pragma once

#include "ccnn/guided_filter.hpp"
#include "ccnn/network.hpp"
#include "ccnn/scattering.hpp"

namespace ccnn {

struct DehazeOptions {
  bool refine = true;
  double t_floor = 0.1;
  guided::GuidedFilterParams filter{};
};

template <typename T>
struct DehazeResult {
  Tensor<T> dehazed;       // (1,3,H,W)
  Tensor<T> transmission;  // map used for inversion, in [0,1]
  Tensor<T> coarse_transmission;
  Tensor<T> airlight_map;
  double airlight = 0.0;
};

// Network forward, scalar airlight from the map median, optional guided
// refinement, then inversion of the scattering model.
template <typename T>
DehazeResult<T> dehaze(const Tensor<T>& hazy, const WeightStore<T>& w, const NetworkConfig& cfg,
                       const DehazeOptions& opt = {}) {
  if (hazy.n() != 1 || hazy.c() != 3) throw ConfigError("dehaze: expected (1,3,H,W), got " + hazy.shape().str());
  auto out = forward_cascade(hazy, w, cfg);
  DehazeResult<T> r;
  r.airlight = estimate_scalar_airlight(out.airlight);
  r.coarse_transmission = std::move(out.transmission);
  r.airlight_map = std::move(out.airlight);
  r.transmission = opt.refine ? guided::refine_transmission(hazy, r.coarse_transmission, opt.filter)
                              : clip01(r.coarse_transmission);
  r.dehazed = scattering::invert_scattering(hazy, r.transmission, r.airlight, opt.t_floor);
  return r;
}

}  // namespace ccnn
