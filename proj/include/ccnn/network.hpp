#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "ccnn/conv.hpp"
#include "ccnn/error.hpp"
#include "ccnn/layers.hpp"
#include "ccnn/rng.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

// Architecture knobs. Defaults give the basic network: a 4-layer trunk of
// 16 filters, a 4-layer airlight head of 8 filters, and a 7-layer
// transmission head built from 2 dense blocks of 3 layers plus an output
// layer. All convolutions use the same odd kernel size.
struct NetworkConfig {
  std::size_t trunk_depth = 4;
  std::size_t trunk_filters = 16;
  std::size_t kernel_size = 3;
  std::size_t airlight_depth = 4;
  std::size_t airlight_filters = 8;
  std::size_t trans_block_size = 3;
  std::size_t concat_blocks = 2;
  double init_std = 0.01;

  std::size_t transmission_layers() const { return concat_blocks * trans_block_size + 1; }

  void validate() const {
    if (trunk_depth < 1 || airlight_depth < 1 || trans_block_size < 1 || concat_blocks < 1)
      throw ConfigError("network depths must all be >= 1");
    if (trunk_filters < 1 || airlight_filters < 1) throw ConfigError("filter counts must be >= 1");
    if (kernel_size % 2 == 0) throw ConfigError("kernel_size must be odd, got " + std::to_string(kernel_size));
    if (!(init_std >= 0.0)) throw ConfigError("init_std must be >= 0");
  }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct LayerSpec {
  std::string name;
  std::size_t in_channels;
  std::size_t out_channels;
  bool relu;
};

// Layer list in canonical order: trunk, airlight head, transmission head.
// The index helpers below are the single source of the wiring.
class Topology {
public:
  explicit Topology(const NetworkConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    const std::size_t f = cfg.trunk_filters, a = cfg.airlight_filters;
    for (std::size_t i = 0; i < cfg.trunk_depth; ++i)
      specs_.push_back({"trunk." + std::to_string(i), i == 0 ? 3 : f, f, true});
    for (std::size_t j = 0; j < cfg.airlight_depth; ++j) {
      const bool last = j + 1 == cfg.airlight_depth;
      specs_.push_back({"airlight." + std::to_string(j), j == 0 ? f : a, last ? 1 : a, !last});
    }
    for (std::size_t k = 0; k < cfg.concat_blocks; ++k)
      for (std::size_t j = 0; j < cfg.trans_block_size; ++j) {
        const std::size_t in = j > 0 ? f : (k == 0 ? f : f * cfg.trans_block_size);
        specs_.push_back({"transmission.b" + std::to_string(k) + "." + std::to_string(j), in, f, true});
      }
    specs_.push_back({"transmission.out", f * cfg.trans_block_size, 1, false});
  }

  const NetworkConfig& config() const { return cfg_; }
  const std::vector<LayerSpec>& specs() const { return specs_; }
  std::size_t size() const { return specs_.size(); }

  std::size_t trunk(std::size_t i) const { return i; }
  std::size_t airlight(std::size_t j) const { return cfg_.trunk_depth + j; }
  std::size_t block(std::size_t k, std::size_t j) const {
    return cfg_.trunk_depth + cfg_.airlight_depth + k * cfg_.trans_block_size + j;
  }
  std::size_t trans_out() const { return size() - 1; }

private:
  NetworkConfig cfg_;
  std::vector<LayerSpec> specs_;
};

// Named conv parameters in topology order.
template <typename T>
struct WeightStore {
  std::vector<std::string> names;
  std::vector<ConvParams<T>> layers;

  std::size_t size() const { return layers.size(); }

  const ConvParams<T>& at(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) return layers[k];
    throw ConfigError("no layer named '" + name + "'");
  }

  std::size_t parameter_count() const {
    std::size_t total = 0;
    for (const auto& l : layers) total += l.kernel.size() + l.bias.size();
    return total;
  }

  // Zero-valued store with the same layout (used for gradients).
  WeightStore zeros_like() const {
    WeightStore z;
    z.names = names;
    for (const auto& l : layers) z.layers.push_back(ConvParams<T>::zeros(l.out_channels(), l.in_channels(), l.ksize()));
    return z;
  }

  void add(const WeightStore& o) {
    for (std::size_t k = 0; k < layers.size(); ++k) {
      accumulate(layers[k].kernel, o.layers[k].kernel);
      for (std::size_t b = 0; b < layers[k].bias.size(); ++b) layers[k].bias[b] += o.layers[k].bias[b];
    }
  }

  void scale(T s) {
    for (auto& l : layers) {
      for (auto& v : l.kernel.vec()) v *= s;
      for (auto& v : l.bias) v *= s;
    }
  }

  template <typename U>
  WeightStore<U> cast() const {
    WeightStore<U> out;
    out.names = names;
    for (const auto& l : layers)
      out.layers.emplace_back(l.kernel.template cast<U>(), std::vector<U>(l.bias.begin(), l.bias.end()));
    return out;
  }

  friend bool operator==(const WeightStore&, const WeightStore&) = default;
};

// Checks that a store matches the topology; names the first offending layer.
template <typename T>
void validate_weights(const WeightStore<T>& w, const Topology& topo) {
  const auto& specs = topo.specs();
  const std::size_t f = topo.config().kernel_size;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto& s = specs[k];
    if (k >= w.size() || w.names[k] != s.name) {
      throw DimMismatchError(s.name, "weights: missing or misplaced layer '" + s.name + "'");
    }
    const Shape want{s.out_channels, s.in_channels, f, f};
    if (!(w.layers[k].kernel.shape() == want) || w.layers[k].bias.size() != s.out_channels) {
      throw DimMismatchError(s.name, "weights: layer '" + s.name + "' has kernel " +
                                         w.layers[k].kernel.shape().str() + ", expected " + want.str());
    }
  }
  if (w.size() != specs.size()) {
    throw DimMismatchError(w.names[specs.size()], "weights: unexpected extra layer '" + w.names[specs.size()] + "'");
  }
}

// Kernels ~ N(0, init_std^2) from a seeded stream, biases exactly zero.
template <typename T>
WeightStore<T> init_weights(const NetworkConfig& cfg, std::uint64_t seed) {
  const Topology topo(cfg);
  Rng rng(derive_seed(seed, "init_weights"));
  WeightStore<T> w;
  for (const auto& s : topo.specs()) {
    auto p = ConvParams<T>::zeros(s.out_channels, s.in_channels, cfg.kernel_size);
    for (auto& v : p.kernel.vec()) v = static_cast<T>(rng.normal(0.0, cfg.init_std));
    w.names.push_back(s.name);
    w.layers.push_back(std::move(p));
  }
  return w;
}

template <typename T>
struct CascadeOutput {
  Tensor<T> transmission;  // (n,1,H,W)
  Tensor<T> airlight;      // (n,1,H,W)
};

// Per-layer inputs and post-activation outputs kept for the backward pass.
template <typename T>
struct CascadeTrace {
  std::vector<Tensor<T>> inputs;
  std::vector<Tensor<T>> outputs;
};

namespace detail {

template <typename T>
Tensor<T> run_layer(const Topology& topo, const WeightStore<T>& w, std::size_t idx, const Tensor<T>& x,
                    CascadeTrace<T>* trace) {
  auto y = conv2d_forward(x, w.layers[idx]);
  if (topo.specs()[idx].relu) y = relu(std::move(y));
  if (trace) {
    trace->inputs[idx] = x;
    trace->outputs[idx] = y;
  }
  return y;
}

}  // namespace detail

// Shared trunk feeding two heads. Within each dense block the layers run in
// sequence and the block's layer outputs, concatenated, feed the next layer.
template <typename T>
CascadeOutput<T> forward_cascade(const Tensor<T>& input, const WeightStore<T>& w, const NetworkConfig& cfg,
                                 CascadeTrace<T>* trace = nullptr) {
  const Topology topo(cfg);
  validate_weights(w, topo);
  if (input.c() != 3) throw ConfigError("forward_cascade: expected 3-channel input, got " + input.shape().str());
  if (trace) {
    trace->inputs.assign(topo.size(), Tensor<T>());
    trace->outputs.assign(topo.size(), Tensor<T>());
  }

  Tensor<T> x = input;
  for (std::size_t i = 0; i < cfg.trunk_depth; ++i) x = detail::run_layer(topo, w, topo.trunk(i), x, trace);
  const Tensor<T> trunk = std::move(x);

  Tensor<T> a = trunk;
  for (std::size_t j = 0; j < cfg.airlight_depth; ++j) a = detail::run_layer(topo, w, topo.airlight(j), a, trace);

  Tensor<T> block_in = trunk;
  for (std::size_t k = 0; k < cfg.concat_blocks; ++k) {
    std::vector<Tensor<T>> outs;
    outs.reserve(cfg.trans_block_size);
    const Tensor<T>* cur = &block_in;
    for (std::size_t j = 0; j < cfg.trans_block_size; ++j) {
      outs.push_back(detail::run_layer(topo, w, topo.block(k, j), *cur, trace));
      cur = &outs.back();
    }
    block_in = concat_channels(outs);
  }
  auto t = detail::run_layer(topo, w, topo.trans_out(), block_in, trace);
  return {std::move(t), std::move(a)};
}

// Parameter gradients given dL/d(transmission) and dL/d(airlight). The trunk
// receives the sum of both heads' input gradients.
template <typename T>
WeightStore<T> backward_cascade(const CascadeTrace<T>& trace, const WeightStore<T>& w, const NetworkConfig& cfg,
                                const Tensor<T>& grad_transmission, const Tensor<T>& grad_airlight) {
  const Topology topo(cfg);
  if (trace.inputs.size() != topo.size()) throw ConfigError("backward_cascade: trace does not match config");
  WeightStore<T> grads;
  grads.names = w.names;
  grads.layers.resize(w.size());

  auto back = [&](std::size_t idx, const Tensor<T>& g_out) {
    const Tensor<T> g = topo.specs()[idx].relu ? relu_backward(trace.outputs[idx], g_out) : g_out;
    auto cg = conv2d_backward(trace.inputs[idx], w.layers[idx], g);
    grads.layers[idx].kernel = std::move(cg.kernel);
    grads.layers[idx].bias = std::move(cg.bias);
    return std::move(cg.input);
  };

  Tensor<T> g_air = grad_airlight;
  for (std::size_t j = cfg.airlight_depth; j-- > 0;) g_air = back(topo.airlight(j), g_air);

  Tensor<T> g = back(topo.trans_out(), grad_transmission);
  const std::vector<std::size_t> widths(cfg.trans_block_size, cfg.trunk_filters);
  for (std::size_t k = cfg.concat_blocks; k-- > 0;) {
    auto parts = split_channels(g, widths);
    Tensor<T> carry;
    for (std::size_t j = cfg.trans_block_size; j-- > 0;) {
      Tensor<T> gj = std::move(parts[j]);
      if (j + 1 < cfg.trans_block_size) accumulate(gj, carry);
      carry = back(topo.block(k, j), gj);
    }
    g = std::move(carry);
  }
  accumulate(g, g_air);
  for (std::size_t i = cfg.trunk_depth; i-- > 0;) g = back(topo.trunk(i), g);
  return grads;
}

// Median of the predicted airlight map, clipped to [0,1].
template <typename T>
double estimate_scalar_airlight(const Tensor<T>& airlight_map) {
  std::vector<double> v(airlight_map.vec().begin(), airlight_map.vec().end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double med = v[mid];
  if (v.size() % 2 == 0) {
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (lower + med);
  }
  return std::clamp(med, 0.0, 1.0);
}

}  // namespace ccnn
