#pragma once

#include <algorithm>
#include <vector>

#include "ccnn/error.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

template <typename T>
Tensor<T> relu(Tensor<T> x) {
  for (auto& v : x.vec()) v = v > T(0) ? v : T(0);
  return x;
}

// Passes grad_out where the forward input was > 0; the subgradient at 0 is 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, Tensor<T> grad_out) {
  require_same_shape(input.shape(), grad_out.shape(), "relu_backward");
  const auto in = input.flat();
  auto g = grad_out.flat();
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!(in[k] > T(0))) g[k] = T(0);
  return grad_out;
}

// Stacks inputs along the channel axis in argument order.
template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& inputs) {
  if (inputs.empty()) throw ConfigError("concat_channels: no inputs");
  const Shape first = inputs.front()->shape();
  std::size_t channels = 0;
  for (const auto* t : inputs) {
    if (t->n() != first.n || !t->shape().same_spatial(first)) {
      throw ConfigError("concat_channels: shape mismatch " + first.str() + " vs " + t->shape().str());
    }
    channels += t->c();
  }
  Tensor<T> out(first.n, channels, first.h, first.w);
  for (std::size_t s = 0; s < first.n; ++s) {
    T* dst = out.sample_span(s).data();
    for (const auto* t : inputs) {
      auto src = t->sample_span(s);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& inputs) {
  std::vector<const Tensor<T>*> ptrs;
  for (const auto& t : inputs) ptrs.push_back(&t);
  return concat_channels(ptrs);
}

// Backward of concat_channels: slices grad by the given channel counts.
template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& grad, const std::vector<std::size_t>& channels) {
  std::size_t total = 0;
  for (auto c : channels) total += c;
  if (total != grad.c()) {
    throw ConfigError("split_channels: channel counts sum to " + std::to_string(total) + " but tensor has " +
                      std::to_string(grad.c()));
  }
  std::vector<Tensor<T>> parts;
  parts.reserve(channels.size());
  for (auto c : channels) parts.emplace_back(grad.n(), c, grad.h(), grad.w());
  const std::size_t plane = grad.shape().plane();
  for (std::size_t s = 0; s < grad.n(); ++s) {
    const T* src = grad.sample_span(s).data();
    for (std::size_t k = 0; k < parts.size(); ++k) {
      auto dst = parts[k].sample_span(s);
      std::copy(src, src + channels[k] * plane, dst.begin());
      src += channels[k] * plane;
    }
  }
  return parts;
}

// Elementwise a += b.
template <typename T>
void accumulate(Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "accumulate");
  auto x = a.flat();
  auto y = b.flat();
  for (std::size_t k = 0; k < x.size(); ++k) x[k] += y[k];
}

}  // namespace ccnn
