// Copyright 2026 The smoothcomp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "smoothcomp/errors.hpp"
#include "smoothcomp/nn/loss.hpp"
#include "smoothcomp/nn/model.hpp"
#include "smoothcomp/nn/network.hpp"
#include "smoothcomp/nn/optim.hpp"
#include "smoothcomp/regularizers.hpp"
#include "smoothcomp/rng.hpp"

namespace smoothcomp::nn {

/// Everything that defines one training run of
///   loss = l(model(x), y) + lambda * R(W).
struct TrainConfig {
  LossKind loss = LossKind::mse;
  reg::RegularizerKind regularizer = reg::RegularizerKind::none;
  double lambda = 0.0;
  OptimizerSettings optimizer{};
  Schedule schedule{};
  long epochs = 1;
  /// 0 = full batch.
  std::size_t batch_size = 0;
  /// Zero-pad-then-random-crop shift for image inputs; 0 disables.
  std::size_t augment_pad = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be finite and >= 0");
    if (!(optimizer.lr > 0.0) || !std::isfinite(optimizer.lr)) throw ArgumentError("lr must be > 0");
    if (epochs < 1) throw ArgumentError("epochs must be >= 1");
    if (optimizer.momentum < 0.0 || optimizer.weight_decay < 0.0)
      throw ArgumentError("momentum and weight_decay must be >= 0");
  }
};

struct LossAndGrads {
  double total = 0.0;
  double data = 0.0;
  double reg_value = 0.0;
  std::vector<ParamBlock> grads;
  Tensor output;
};

/// Loss and exact gradients for one batch.
inline LossAndGrads loss_and_grads(const Model& model, const Dataset& batch, const TrainConfig& config) {
  if (batch.size() == 0) throw ArgumentError("loss_and_grads: empty batch");
  LossAndGrads out;
  ForwardTrace trace;
  out.output = forward(model, batch.inputs, &trace);
  LossValue lv = config.loss == LossKind::mse ? mse_loss(out.output, batch.targets)
                                              : cross_entropy_loss(out.output, batch.labels);
  if (!std::isfinite(lv.value)) throw NumericError("non-finite data loss at network output");
  out.data = lv.value;
  out.grads = zero_grads(model);
  backward(model, trace, std::move(lv.grad), out.grads);
  if (config.regularizer != reg::RegularizerKind::none && config.lambda > 0.0) {
    const reg::Penalty pen = reg::evaluate(config.regularizer, model, true);
    if (!std::isfinite(pen.value)) throw NumericError("non-finite regularizer value");
    out.reg_value = pen.value;
    for (std::size_t s = 0; s < pen.weight_grads.size(); ++s) {
      if (!pen.weight_grads[s].empty()) out.grads[s].weight.axpy(config.lambda, pen.weight_grads[s]);
    }
  } else if (config.regularizer != reg::RegularizerKind::none) {
    out.reg_value = reg::evaluate(config.regularizer, model, false).value;
  }
  out.total = out.data + config.lambda * out.reg_value;
  return out;
}

struct EpochMetrics {
  long epoch = 0;
  double lr = 0.0;
  double data_loss = 0.0;
  double reg_value = 0.0;
  double total_loss = 0.0;
  /// PSNR in dB for mse runs (unit peak), accuracy for cross-entropy runs.
  double metric = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> log;
  std::size_t steps = 0;
};

namespace detail {

/// Shift every image by a random offset in [-pad, pad] with zero fill.
inline void random_shift(Tensor& images, std::size_t pad, Rng& rng) {
  const std::size_t batch = images.dim(0), c = images.dim(1), h = images.dim(2), w = images.dim(3);
  const long p = static_cast<long>(pad);
  std::vector<double> buf(c * h * w);
  for (std::size_t b = 0; b < batch; ++b) {
    const long dy = static_cast<long>(rng.below(2 * pad + 1)) - p;
    const long dx = static_cast<long>(rng.below(2 * pad + 1)) - p;
    auto img = images.row(b);
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t ch = 0; ch < c; ++ch)
      for (long y = 0; y < static_cast<long>(h); ++y)
        for (long x = 0; x < static_cast<long>(w); ++x) {
          const long sy = y + dy, sx = x + dx;
          if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w)) continue;
          buf[(ch * h + y) * w + x] = img[(ch * h + sy) * w + sx];
        }
    std::copy(buf.begin(), buf.end(), img.begin());
  }
}

inline std::size_t argmax_row(const Tensor& t, std::size_t i) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < t.cols(); ++c)
    if (t(i, c) > t(i, best)) best = c;
  return best;
}

}  // namespace detail

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Train `model` in place. Mini-batches follow a seeded shuffle per epoch, so
/// a run is fully determined by (model, dataset, config).
inline TrainResult train(Model& model, const Dataset& data, const TrainConfig& config,
                         const EpochCallback& on_epoch = {}) {
  config.validate();
  model.validate();
  if (data.size() == 0) throw ArgumentError("train: empty dataset");
  const std::size_t n = data.size();
  const std::size_t bs = config.batch_size == 0 ? n : std::min(config.batch_size, n);
  const std::size_t batches = (n + bs - 1) / bs;
  const std::size_t total_steps = batches * static_cast<std::size_t>(config.epochs);

  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  Optimizer opt(config.optimizer, model);
  TrainResult result;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (long epoch = 0; epoch < config.epochs; ++epoch) {
    if (batches > 1) rng.shuffle(order);
    EpochMetrics em;
    em.epoch = epoch;
    em.lr = config.schedule.lr_at(result.steps, config.optimizer.lr, total_steps);
    double correct = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * bs, hi = std::min(n, lo + bs);
      const std::span<const std::size_t> idx(order.data() + lo, hi - lo);
      Dataset batch = batches > 1 ? data.subset(idx) : data;
      if (config.augment_pad > 0 && batch.inputs.rank() == 4) detail::random_shift(batch.inputs, config.augment_pad, rng);
      LossAndGrads lg;
      try {
        lg = loss_and_grads(model, batch, config);
      } catch (const NumericError& e) {
        throw DivergenceError(std::string("training diverged in epoch ") + std::to_string(epoch) + ": " + e.what(),
                              epoch - 1);
      }
      const double w = static_cast<double>(hi - lo) / static_cast<double>(n);
      em.data_loss += w * lg.data;
      em.reg_value += w * lg.reg_value;
      em.total_loss += w * lg.total;
      if (config.loss == LossKind::cross_entropy) {
        for (std::size_t i = 0; i < batch.size(); ++i)
          if (detail::argmax_row(lg.output, i) == batch.labels[i]) correct += 1.0;
      }
      const double lr = config.schedule.lr_at(result.steps, config.optimizer.lr, total_steps);
      opt.step(model, lg.grads, lr);
      ++result.steps;
    }
    if (config.loss == LossKind::mse) {
      em.metric = em.data_loss > 0.0 ? 10.0 * std::log10(1.0 / em.data_loss) : std::numeric_limits<double>::infinity();
    } else {
      em.metric = correct / static_cast<double>(n);
    }
    result.log.push_back(em);
    if (on_epoch) on_epoch(em);
  }
  return result;
}

}  // namespace smoothcomp::nn
