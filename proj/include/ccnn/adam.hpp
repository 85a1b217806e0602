#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ccnn/error.hpp"

namespace ccnn {

struct AdamHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moments for one parameter tensor, zero-initialized.
template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t size) : m(size, T(0)), v(size, T(0)) {}
};

// One bias-corrected Adam update. The gradient is checked for NaN/Inf before
// anything is modified; on failure the parameter and state are untouched.
template <typename T>
void adam_step(std::span<T> param, std::span<const T> grad, AdamState<T>& state, const AdamHyper& hp,
               const std::string& name = "param") {
  if (grad.size() != param.size() || state.m.size() != param.size() || state.v.size() != param.size()) {
    throw ConfigError("adam_step(" + name + "): size mismatch between param, grad and moments");
  }
  for (std::size_t k = 0; k < grad.size(); ++k) {
    if (!std::isfinite(static_cast<double>(grad[k]))) {
      throw NumericError("adam_step: non-finite gradient in parameter '" + name + "' at index " +
                         std::to_string(k));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hp.beta1, t);
  const double c2 = 1.0 - std::pow(hp.beta2, t);
  for (std::size_t k = 0; k < param.size(); ++k) {
    const double g = grad[k];
    const double m = hp.beta1 * state.m[k] + (1.0 - hp.beta1) * g;
    const double v = hp.beta2 * state.v[k] + (1.0 - hp.beta2) * g * g;
    state.m[k] = static_cast<T>(m);
    state.v[k] = static_cast<T>(v);
    param[k] = static_cast<T>(param[k] - hp.lr * (m / c1) / (std::sqrt(v / c2) + hp.eps));
  }
}

}  // namespace ccnn
