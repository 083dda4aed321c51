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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "smoothcomp/errors.hpp"
#include "smoothcomp/tensor.hpp"

namespace smoothcomp::nn {

/// Samples along the leading axis. Regression sets use `targets`,
/// classification sets use `labels`.
struct Dataset {
  Tensor inputs;
  Tensor targets;
  std::vector<std::size_t> labels;
  std::size_t classes = 0;

  std::size_t size() const { return inputs.empty() ? 0 : inputs.dim(0); }
  bool is_classification() const { return !labels.empty(); }

  Dataset subset(std::span<const std::size_t> idx) const {
    Dataset d;
    d.classes = classes;
    d.inputs = gather(inputs, idx);
    if (!targets.empty()) d.targets = gather(targets, idx);
    if (!labels.empty()) {
      d.labels.reserve(idx.size());
      for (std::size_t i : idx) d.labels.push_back(labels.at(i));
    }
    return d;
  }

  static Tensor gather(const Tensor& t, std::span<const std::size_t> idx) {
    Shape s = t.shape();
    s[0] = idx.size();
    const std::size_t stride = t.size() / t.dim(0);
    std::vector<double> data;
    data.reserve(idx.size() * stride);
    for (std::size_t i : idx) {
      if (i >= t.dim(0)) throw ArgumentError("dataset index out of range");
      auto r = t.row(i);
      data.insert(data.end(), r.begin(), r.end());
    }
    return Tensor(std::move(s), std::move(data));
  }
};

enum class LossKind { mse, cross_entropy };

inline const char* to_string(LossKind k) { return k == LossKind::mse ? "mse" : "cross_entropy"; }

inline LossKind loss_from_string(const std::string& s) {
  if (s == "mse") return LossKind::mse;
  if (s == "cross_entropy") return LossKind::cross_entropy;
  throw ArgumentError("unknown loss '" + s + "'");
}

struct LossValue {
  double value = 0.0;
  Tensor grad;  ///< d value / d prediction
};

/// Mean over batch and outputs of the squared error.
inline LossValue mse_loss(const Tensor& pred, const Tensor& target) {
  target.require_shape(pred.shape(), "mse_loss");
  LossValue out{0.0, Tensor(pred.shape())};
  const double inv = 1.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    out.value += d * d;
    out.grad[i] = 2.0 * d * inv;
  }
  out.value *= inv;
  return out;
}

/// Mean over the batch of -log softmax(logits)[label].
inline LossValue cross_entropy_loss(const Tensor& logits, std::span<const std::size_t> labels) {
  logits.require_rank(2, "cross_entropy_loss");
  const std::size_t batch = logits.rows(), classes = logits.cols();
  if (labels.size() != batch) throw DimensionError("cross_entropy_loss: label count differs from batch size");
  LossValue out{0.0, Tensor(logits.shape())};
  const double inv = 1.0 / static_cast<double>(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    if (labels[i] >= classes) throw ArgumentError("cross_entropy_loss: label out of range");
    double mx = logits(i, 0);
    for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, logits(i, c));
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(logits(i, c) - mx);
    const double lse = mx + std::log(z);
    out.value += lse - logits(i, labels[i]);
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(logits(i, c) - lse);
      out.grad(i, c) = (p - (c == labels[i] ? 1.0 : 0.0)) * inv;
    }
  }
  out.value *= inv;
  return out;
}

}  // namespace smoothcomp::nn
