// Library walk-through without trained weights: render a procedural scene,
// add haze, then recover it from a noisy transmission estimate with and
// without guided-filter refinement.

#include <cstdio>

#include "ccnn/datasynth.hpp"
#include "ccnn/guided_filter.hpp"
#include "ccnn/metrics.hpp"
#include "ccnn/rng.hpp"
#include "ccnn/scattering.hpp"

int main() {
  using namespace ccnn;
  const std::size_t h = 154, w = 207;
  const auto [clean, raw_depth] = synth::procedural_scene(h, w, 7);
  const auto depth = synth::normalize_depth(raw_depth);

  const double beta = 1.4, airlight = 0.85;
  const auto t = scattering::transmission_from_depth(depth, beta);
  const auto hazy = scattering::synthesize_hazy(clean, t, airlight);

  Rng rng(11);
  Tensor<float> noisy = t;
  for (auto& v : noisy.vec()) v = static_cast<float>(std::clamp(v + rng.normal(0.0, 0.05), 0.0, 1.0));
  const auto refined = guided::refine_transmission(hazy, noisy, {16, 1e-3});

  auto score = [&](const char* label, const Tensor<float>& tmap) {
    const auto j = scattering::invert_scattering(hazy, tmap, airlight, 0.1);
    const double mse = metrics::mse_255(j, clean);
    std::printf("%-22s psnr %6.2f dB  ssim %.4f\n", label, metrics::psnr(mse), metrics::ssim_eval(j, clean));
  };
  std::printf("%-22s psnr %6.2f dB  ssim %.4f\n", "hazy input", metrics::psnr(metrics::mse_255(hazy, clean)),
              metrics::ssim_eval(hazy, clean));
  score("noisy transmission", noisy);
  score("refined transmission", refined);
  score("true transmission", t);
}
