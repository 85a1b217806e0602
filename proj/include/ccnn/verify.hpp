#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ccnn/box.hpp"
#include "ccnn/conv.hpp"
#include "ccnn/guided_filter.hpp"
#include "ccnn/layers.hpp"
#include "ccnn/losses.hpp"
#include "ccnn/metrics.hpp"
#include "ccnn/network.hpp"
#include "ccnn/rng.hpp"
#include "ccnn/scattering.hpp"

// Independent oracles (finite differences, naive sliding windows, closed
// forms) and the check suite behind `ccnn verify`. Nothing here calls the
// code path it is checking except to obtain the value under test.
namespace ccnn::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // worst observed error
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  std::uint64_t seed = 0;
  // Negative control: scales the analytic conv kernel gradient by (1 + x)
  // before comparison. Any nonzero value must make the suite fail.
  double perturb_gradient = 0.0;
};

// |a - n| / max(|a|, |n|, floor)
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
  double worst = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // perturbation crossed a ReLU kink
};

// Central differences of loss() w.r.t. every entry of params. If signature()
// is given, entries whose +/-h evaluations change it (an activation pattern
// flipped) are skipped rather than compared.
// An empty `subset` means every entry.
inline GradCheck finite_difference_check(std::span<double> params, std::span<const double> analytic,
                                         const std::function<double()>& loss, double h = 1e-5,
                                         const std::function<std::uint64_t()>& signature = {},
                                         const std::vector<std::size_t>& subset = {}) {
  GradCheck gc;
  const std::uint64_t base_sig = signature ? signature() : 0;
  const std::size_t count = subset.empty() ? params.size() : subset.size();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t k = subset.empty() ? i : subset[i];
    const double orig = params[k];
    params[k] = orig + h;
    const double fp = loss();
    const bool sp = signature && signature() != base_sig;
    params[k] = orig - h;
    const double fm = loss();
    const bool sm = signature && signature() != base_sig;
    params[k] = orig;
    if (sp || sm) {
      ++gc.skipped;
      continue;
    }
    const double err = relative_error(analytic[k], (fp - fm) / (2.0 * h));
    ++gc.checked;
    if (err > gc.worst) {
      gc.worst = err;
      gc.worst_index = k;
    }
  }
  return gc;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline Tensor<double> random_tensor(Rng& rng, Shape s, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(s);
  for (auto& v : t.vec()) v = rng.uniform(lo, hi);
  return t;
}

// Sliding-window mean with explicit bounds checks, O(h*w*r^2).
template <typename T>
std::vector<double> naive_box_mean(std::span<const T> img, std::size_t h, std::size_t w, std::size_t r) {
  std::vector<double> out(h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0, n = 0.0;
      for (long dy = -static_cast<long>(r); dy <= static_cast<long>(r); ++dy)
        for (long dx = -static_cast<long>(r); dx <= static_cast<long>(r); ++dx) {
          const long yy = static_cast<long>(y) + dy, xx = static_cast<long>(x) + dx;
          if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) continue;
          s += img[static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)];
          n += 1.0;
        }
      out[y * w + x] = s / n;
    }
  return out;
}

// ---------------------------------------------------------------- checks

inline std::uint64_t relu_signature(const CascadeTrace<double>& tr) {
  std::uint64_t h = 0x12345;
  for (const auto& o : tr.outputs)
    for (double v : o.vec()) h = splitmix64(h ^ (v > 0.0 ? 1u : 0u));
  return h;
}

inline CheckResult check_conv_gradient(const Options& opt, double tol = 1e-4) {
  Rng rng(derive_seed(opt.seed, "verify:conv"));
  CheckResult r{"conv2d gradient vs finite differences", true, 0.0, tol, "", 0.0};
  for (std::size_t f : {3u, 5u}) {
    auto x = random_tensor(rng, {2, 2, 5, 5});
    ConvParams<double> p(random_tensor(rng, {4, 2, f, f}), std::vector<double>(4));
    for (auto& b : p.bias) b = rng.uniform(-1, 1);
    const auto g = random_tensor(rng, {2, 4, 5, 5});
    auto grads = conv2d_backward(x, p, g);
    for (auto& v : grads.kernel.vec()) v *= 1.0 + opt.perturb_gradient;
    auto loss = [&] { return dot(g.flat(), conv2d_forward(x, p).flat()); };
    const auto gi = finite_difference_check(x.flat(), grads.input.flat(), loss);
    const auto gk = finite_difference_check(p.kernel.flat(), grads.kernel.flat(), loss);
    const auto gb = finite_difference_check(std::span<double>(p.bias), std::span<const double>(grads.bias), loss);
    r.value = std::max({r.value, gi.worst, gk.worst, gb.worst});
  }
  r.passed = r.value <= tol;
  return r;
}

inline CheckResult check_relu_gradient(const Options& opt, double tol = 1e-4) {
  Rng rng(derive_seed(opt.seed, "verify:relu"));
  CheckResult r{"relu gradient vs finite differences", true, 0.0, tol, "", 0.0};
  auto x = random_tensor(rng, {2, 4, 8, 8});
  for (auto& v : x.vec())
    if (std::abs(v) < 1e-3) v = 0.5;  // stay off the kink
  const auto g = random_tensor(rng, x.shape());
  const auto analytic = relu_backward(x, g);
  const auto gc = finite_difference_check(x.flat(), analytic.flat(), [&] { return dot(g.flat(), relu(x).flat()); });
  r.value = gc.worst;
  r.passed = r.value <= tol;
  return r;
}

inline CheckResult check_concat_gradient(const Options& opt, double tol = 1e-4) {
  Rng rng(derive_seed(opt.seed, "verify:concat"));
  CheckResult r{"concat gradient vs finite differences", true, 0.0, tol, "", 0.0};
  auto a = random_tensor(rng, {2, 3, 6, 8});
  auto b = random_tensor(rng, {2, 4, 6, 8});
  const auto g = random_tensor(rng, {2, 7, 6, 8});
  const auto parts = split_channels(g, {3, 4});
  auto loss = [&] { return dot(g.flat(), concat_channels(std::vector<const Tensor<double>*>{&a, &b}).flat()); };
  const auto ga = finite_difference_check(a.flat(), parts[0].flat(), loss);
  const auto gb = finite_difference_check(b.flat(), parts[1].flat(), loss);
  const auto roundtrip = split_channels(concat_channels(std::vector<const Tensor<double>*>{&a, &b}), {3, 4});
  r.value = std::max(ga.worst, gb.worst);
  r.passed = r.value <= tol && roundtrip[0] == a && roundtrip[1] == b;
  if (!(roundtrip[0] == a && roundtrip[1] == b)) r.detail = "concat/split roundtrip failed";
  return r;
}

inline CheckResult check_conv_fast_vs_reference(const Options& opt, double tol = 1e-10) {
  Rng rng(derive_seed(opt.seed, "verify:convref"));
  CheckResult r{"lowered conv matches direct conv", true, 0.0, tol, "", 0.0};
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t f = 1 + 2 * static_cast<std::size_t>(trial % 4);
    const Shape xs{1 + rng.below(2), 1 + rng.below(6), 1 + rng.below(14), 1 + rng.below(14)};
    const auto x = random_tensor(rng, xs);
    std::vector<double> bias(1 + rng.below(8));
    for (auto& b : bias) b = rng.uniform(-1, 1);
    auto kernel = random_tensor(rng, {bias.size(), xs.c, f, f});
    ConvParams<double> p(std::move(kernel), std::move(bias));
    const auto g = random_tensor(rng, {xs.n, p.kernel.n(), xs.h, xs.w});
    const auto fast = conv2d_forward(x, p), ref = conv2d_forward_reference(x, p);
    const auto bf = conv2d_backward(x, p, g), br = conv2d_backward_reference(x, p, g);
    auto cmp = [&](std::span<const double> a, std::span<const double> b) {
      for (std::size_t k = 0; k < a.size(); ++k) r.value = std::max(r.value, std::abs(a[k] - b[k]));
    };
    cmp(fast.flat(), ref.flat());
    cmp(bf.input.flat(), br.input.flat());
    cmp(bf.kernel.flat(), br.kernel.flat());
    cmp(bf.bias, br.bias);
  }
  r.passed = r.value <= tol;
  return r;
}

// Tiny network used for the end-to-end gradient check.
inline NetworkConfig gradcheck_config() {
  NetworkConfig c;
  c.trunk_depth = 2;
  c.trunk_filters = 4;
  return c;
}

// Total loss and analytic gradient of `cfg` on a random size x size sample,
// compared with central differences. per_tensor > 0 checks that many randomly
// chosen entries of each kernel instead of all of them.
inline CheckResult check_network_gradient(const Options& opt, const NetworkConfig& cfg = gradcheck_config(),
                                          double tol = 1e-3, std::size_t size = 8, std::size_t per_tensor = 0) {
  Rng rng(derive_seed(opt.seed, "verify:network"));
  CheckResult r{"network L_total gradient vs finite differences", true, 0.0, tol, "", 0.0};
  auto w = init_weights<double>(cfg, derive_seed(opt.seed, "verify:network:init"));
  for (auto& l : w.layers) {
    const double fan_in = static_cast<double>(l.in_channels() * l.ksize() * l.ksize());
    for (auto& v : l.kernel.vec()) v = rng.normal(0.0, std::sqrt(2.0 / fan_in));
    for (auto& b : l.bias) b = rng.uniform(0.0, 0.2);
  }
  const auto x = random_tensor(rng, {1, 3, size, size}, 0.0, 1.0);
  const auto t_target = random_tensor(rng, {1, 1, size, size}, 0.05, 1.0);
  const auto b_target = scattering::airlight_map<double>(rng.uniform(0.7, 1.0), size, size);

  auto total = [&](CascadeTrace<double>* tr, Tensor<double>* gt, Tensor<double>* ga) {
    const auto out = forward_cascade(x, w, cfg, tr);
    auto ls = losses::ssim_loss(out.airlight, b_target);
    auto lm = losses::mse_loss(out.transmission, t_target);
    if (gt) *gt = lm.grad;
    if (ga) *ga = ls.grad;
    return losses::total_loss(ls.value, lm.value);
  };
  CascadeTrace<double> trace;
  Tensor<double> gt, ga;
  total(&trace, &gt, &ga);
  auto grads = backward_cascade(trace, w, cfg, gt, ga);
  if (opt.perturb_gradient != 0.0)
    for (auto& v : grads.layers[0].kernel.vec()) v *= 1.0 + opt.perturb_gradient;

  auto signature = [&] {
    CascadeTrace<double> tr;
    forward_cascade(x, w, cfg, &tr);
    return relu_signature(tr);
  };
  auto loss = [&] { return total(nullptr, nullptr, nullptr); };
  std::size_t checked = 0, skipped = 0;
  Rng pick(derive_seed(opt.seed, "verify:network:subset"));
  for (std::size_t k = 0; k < w.size(); ++k) {
    std::vector<std::size_t> subset;
    if (per_tensor > 0 && per_tensor < w.layers[k].kernel.size())
      for (std::size_t i = 0; i < per_tensor; ++i) subset.push_back(pick.below(w.layers[k].kernel.size()));
    const auto gk = finite_difference_check(w.layers[k].kernel.flat(), grads.layers[k].kernel.flat(), loss, 1e-5,
                                            signature, subset);
    const auto gb = finite_difference_check(std::span<double>(w.layers[k].bias), std::span<const double>(grads.layers[k].bias),
                                            loss, 1e-5, signature);
    checked += gk.checked + gb.checked;
    skipped += gk.skipped + gb.skipped;
    if (std::max(gk.worst, gb.worst) > r.value) {
      r.value = std::max(gk.worst, gb.worst);
      r.detail = "worst in " + w.names[k];
    }
  }
  r.detail += "; " + std::to_string(checked) + " params checked, " + std::to_string(skipped) + " skipped at ReLU kinks";
  // A handful of kink skips is expected; many would hide real errors.
  r.passed = r.value <= tol && skipped * 100 <= checked + skipped;
  return r;
}

inline CheckResult check_loss_gradients(const Options& opt, double tol = 1e-3) {
  Rng rng(derive_seed(opt.seed, "verify:losses"));
  CheckResult r{"SSIM and MSE loss gradients vs finite differences", true, 0.0, tol, "", 0.0};
  auto pred = random_tensor(rng, {2, 1, 16, 16}, 0.0, 1.0);
  const auto target = random_tensor(rng, {2, 1, 16, 16}, 0.0, 1.0);
  const auto ls = losses::ssim_loss(pred, target);
  const auto gs = finite_difference_check(pred.flat(), ls.grad.flat(), [&] { return losses::ssim_loss(pred, target).value; });
  const auto lm = losses::mse_loss(pred, target);
  const auto gm = finite_difference_check(pred.flat(), lm.grad.flat(), [&] { return losses::mse_loss(pred, target).value; });
  r.value = std::max(gs.worst, gm.worst);
  r.passed = r.value <= tol;
  return r;
}

inline CheckResult check_scattering_roundtrip(const Options& opt, std::size_t trials = 1000, double tol = 1e-6) {
  Rng rng(derive_seed(opt.seed, "verify:scatter"));
  CheckResult r{"scattering synthesize/invert roundtrip", true, 0.0, tol, "", 0.0};
  for (std::size_t k = 0; k < trials; ++k) {
    const auto j = random_tensor(rng, {1, 3, 4, 4}, 0.0, 1.0);
    const auto t = random_tensor(rng, {1, 1, 4, 4}, 0.1, 1.0);
    const double b = rng.uniform(0.7, 1.0);
    const auto back = scattering::invert_scattering(scattering::synthesize_hazy(j, t, b), t, b, 0.1);
    for (std::size_t i = 0; i < j.size(); ++i) r.value = std::max(r.value, std::abs(back[i] - j[i]));
  }
  r.passed = r.value <= tol;
  return r;
}

inline CheckResult check_box_filter_oracle(const Options& opt, std::size_t trials = 50, double tol = 1e-10) {
  Rng rng(derive_seed(opt.seed, "verify:box"));
  CheckResult r{"box filter vs naive sliding window", true, 0.0, tol, "", 0.0};
  for (std::size_t k = 0; k < trials; ++k) {
    const std::size_t h = 1 + rng.below(40), w = 1 + rng.below(40), rad = 1 + rng.below(12);
    const auto img = random_tensor(rng, {1, 1, h, w}, 0.0, 1.0);
    const auto fast = guided::box_filter(img, rad);
    const auto slow = naive_box_mean(img.flat(), h, w, rad);
    for (std::size_t i = 0; i < slow.size(); ++i) r.value = std::max(r.value, std::abs(fast[i] - slow[i]));
  }
  r.passed = r.value <= tol;
  return r;
}

inline CheckResult check_guided_affine(const Options& opt, double tol = 1e-8) {
  Rng rng(derive_seed(opt.seed, "verify:guided"));
  CheckResult r{"guided filter reproduces affine input at eps=0", true, 0.0, tol, "", 0.0};
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t h = 16 + rng.below(32), w = 16 + rng.below(32);
    const auto guide = random_tensor(rng, {1, 1, h, w}, 0.0, 1.0);
    Tensor<double> input(guide.shape());
    for (std::size_t i = 0; i < input.size(); ++i) input[i] = 2.0 * guide[i] + 0.1;
    const auto out = guided::guided_filter(guide, input, {1 + rng.below(8), 0.0});
    for (std::size_t i = 0; i < out.size(); ++i) r.value = std::max(r.value, std::abs(out[i] - input[i]));
  }
  r.passed = r.value <= tol;
  return r;
}

inline CheckResult check_ssim_closed_forms(const Options& opt, double tol = 1e-12) {
  Rng rng(derive_seed(opt.seed, "verify:ssim"));
  CheckResult r{"training SSIM closed forms", true, 0.0, tol, "", 0.0};
  const losses::SsimParams p;
  const std::size_t n = 32, rad = p.radius;
  for (int trial = 0; trial < 20; ++trial) {
    const double a = rng.uniform(0.0, 1.0), b = rng.uniform(0.0, 1.0);
    const auto m = losses::ssim_map(Tensor<double>(1, 1, n, n, a), Tensor<double>(1, 1, n, n, b), p);
    const double expect = (2 * a * b + p.c1) / (a * a + b * b + p.c1);
    for (std::size_t y = rad; y + rad < n; ++y)
      for (std::size_t x = rad; x + rad < n; ++x) r.value = std::max(r.value, std::abs(m(0, 0, y, x) - expect));
  }
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = random_tensor(rng, {1, 1, 24, 20}, 0.0, 1.0);
    const auto m = losses::ssim_map(x, x, p);
    for (double v : m.vec()) r.value = std::max(r.value, std::abs(v - 1.0));
  }
  r.passed = r.value <= tol;
  return r;
}

// PSNR of the reported MSE 958.1711 against the reported 18.3298 dB.
inline CheckResult check_psnr_arithmetic(const Options&, double tol = 0.05) {
  CheckResult r{"PSNR/MSE arithmetic", true, 0.0, tol, "", 0.0};
  const double p = metrics::psnr(958.1711);
  r.value = std::abs(p - 18.3298);
  r.passed = r.value <= tol && std::abs(p - 18.3165) < 5e-4;
  r.detail = "psnr(958.1711) = " + std::to_string(p) + " dB";
  return r;
}

inline std::vector<CheckResult> run_suite(const Options& opt) {
  using Check = std::function<CheckResult(const Options&)>;
  const std::vector<Check> checks{
      [](const Options& o) { return check_conv_gradient(o); },
      [](const Options& o) { return check_relu_gradient(o); },
      [](const Options& o) { return check_concat_gradient(o); },
      [](const Options& o) { return check_conv_fast_vs_reference(o); },
      [](const Options& o) { return check_network_gradient(o); },
      [](const Options& o) { return check_loss_gradients(o); },
      [](const Options& o) { return check_scattering_roundtrip(o); },
      [](const Options& o) { return check_box_filter_oracle(o); },
      [](const Options& o) { return check_guided_affine(o); },
      [](const Options& o) { return check_ssim_closed_forms(o); },
      [](const Options& o) { return check_psnr_arithmetic(o); },
  };
  std::vector<CheckResult> out;
  for (const auto& c : checks) {
    const auto t0 = std::chrono::steady_clock::now();
    auto res = c(opt);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace ccnn::verify
