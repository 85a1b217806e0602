#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "ccnn/adam.hpp"
#include "ccnn/datasynth.hpp"
#include "ccnn/error.hpp"
#include "ccnn/losses.hpp"
#include "ccnn/network.hpp"
#include "ccnn/parallel.hpp"
#include "ccnn/rng.hpp"
#include "ccnn/scattering.hpp"

namespace ccnn {

template <typename T>
struct TrainSample {
  std::string id;
  Tensor<T> hazy;          // (1,3,H,W)
  Tensor<T> transmission;  // (1,1,H,W)
  double airlight = 0.0;
};

template <typename T = float>
std::vector<TrainSample<T>> load_training_set(const synth::SampleSet& set, std::size_t threads = 1) {
  std::vector<TrainSample<T>> out(set.records.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const auto& r = set.records[i];
    out[i] = {r.id, image::read_ppm<T>(set.dir / r.hazy), image::read_pgm<T>(set.dir / r.transmission), r.airlight};
  });
  return out;
}

template <typename T>
TrainSample<T> to_train_sample(const synth::HazeSample<T>& s) {
  return {s.sample_id, s.hazy, s.transmission, s.airlight};
}

struct LossBreakdown {
  double total = 0.0;
  double ssim = 0.0;
  double mse = 0.0;
};

struct TrainHyper {
  AdamHyper adam{};
  std::size_t batch = 32;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  LossBreakdown val;
};

struct TrainHistory {
  LossBreakdown initial_val;
  std::vector<EpochRecord> epochs;
};

template <typename T>
struct TrainResult {
  WeightStore<T> weights;
  TrainHistory history;
  std::vector<AdamState<T>> kernel_state;  // per layer, topology order
  std::vector<AdamState<T>> bias_state;
};

// Loss of one sample and its parameter gradient scaled by `weight`.
template <typename T>
LossBreakdown sample_loss_and_grad(const TrainSample<T>& s, const WeightStore<T>& w, const NetworkConfig& cfg,
                                   double weight, WeightStore<T>* grads) {
  CascadeTrace<T> trace;
  const auto out = forward_cascade(s.hazy, w, cfg, grads ? &trace : nullptr);
  const auto target_b = scattering::airlight_map<T>(s.airlight, s.hazy.h(), s.hazy.w());
  auto ls = losses::ssim_loss(out.airlight, target_b);
  auto lm = losses::mse_loss(out.transmission, s.transmission);
  LossBreakdown lb{ls.value + lm.value, ls.value, lm.value};
  if (grads) {
    const T k = static_cast<T>(weight);
    for (auto& v : ls.grad.vec()) v *= k;
    for (auto& v : lm.grad.vec()) v *= k;
    *grads = backward_cascade(trace, w, cfg, lm.grad, ls.grad);
  }
  return lb;
}

// Mean losses over a sample set (same as treating it as one batch).
template <typename T>
LossBreakdown evaluate_loss(const std::vector<TrainSample<T>>& set, const WeightStore<T>& w, const NetworkConfig& cfg,
                            std::size_t threads = 1) {
  std::vector<LossBreakdown> per(set.size());
  parallel_for(set.size(), threads, [&](std::size_t i) { per[i] = sample_loss_and_grad<T>(set[i], w, cfg, 1.0, nullptr); });
  LossBreakdown mean;
  for (const auto& l : per) {
    mean.ssim += l.ssim;
    mean.mse += l.mse;
  }
  mean.ssim /= static_cast<double>(set.size());
  mean.mse /= static_cast<double>(set.size());
  mean.total = losses::total_loss(mean.ssim, mean.mse);
  return mean;
}

// Mini-batch Adam on L_SSIM(airlight) + L_MSE(transmission). Per-sample
// gradients are reduced in sample order, so results do not depend on the
// thread count. The trailing partial batch is kept.
template <typename T>
TrainResult<T> train(const std::vector<TrainSample<T>>& train_set, const std::vector<TrainSample<T>>& val_set,
                     const NetworkConfig& cfg, const TrainHyper& hp,
                     const std::function<void(const EpochRecord&)>& on_epoch = {},
                     const WeightStore<T>* initial = nullptr) {
  if (train_set.empty() || val_set.empty()) throw ConfigError("train: training and validation sets must be non-empty");
  if (hp.batch < 1) throw ParamError("train: batch size must be >= 1");
  const Shape in_shape = train_set.front().hazy.shape();
  for (const auto* set : {&train_set, &val_set})
    for (const auto& s : *set)
      if (!(s.hazy.shape() == in_shape)) throw ConfigError("train: sample '" + s.id + "' has shape " + s.hazy.shape().str() + ", expected " + in_shape.str());

  TrainResult<T> res;
  res.weights = initial ? *initial : init_weights<T>(cfg, hp.seed);
  validate_weights(res.weights, Topology(cfg));
  for (const auto& l : res.weights.layers) {
    res.kernel_state.emplace_back(l.kernel.size());
    res.bias_state.emplace_back(l.bias.size());
  }
  res.history.initial_val = evaluate_loss(val_set, res.weights, cfg, hp.threads);

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t e = 1; e <= hp.epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng(derive_seed(hp.seed, "shuffle", e)).shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += hp.batch, ++b) {
      const std::size_t n = std::min(hp.batch, order.size() - start);
      std::vector<WeightStore<T>> grads(n);
      std::vector<LossBreakdown> losses(n);
      parallel_for(n, hp.threads, [&](std::size_t i) {
        losses[i] = sample_loss_and_grad(train_set[order[start + i]], res.weights, cfg, 1.0 / static_cast<double>(n), &grads[i]);
      });
      double batch_loss = 0.0;
      for (const auto& l : losses) batch_loss += l.total;
      if (!std::isfinite(batch_loss)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(e) + " batch " + std::to_string(b));
      }
      epoch_loss += batch_loss;
      for (std::size_t i = 1; i < n; ++i) grads[0].add(grads[i]);
      for (std::size_t k = 0; k < res.weights.size(); ++k) {
        auto& layer = res.weights.layers[k];
        const auto& g = grads[0].layers[k];
        adam_step(layer.kernel.flat(), g.kernel.flat(), res.kernel_state[k], hp.adam, res.weights.names[k] + ".kernel");
        adam_step(std::span<T>(layer.bias), std::span<const T>(g.bias), res.bias_state[k], hp.adam,
                  res.weights.names[k] + ".bias");
      }
    }
    EpochRecord rec{e, epoch_loss / static_cast<double>(order.size()), evaluate_loss(val_set, res.weights, cfg, hp.threads)};
    res.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return res;
}

}  // namespace ccnn
