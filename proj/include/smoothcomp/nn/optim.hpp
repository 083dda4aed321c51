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
#include <numbers>
#include <string>
#include <vector>

#include "smoothcomp/errors.hpp"
#include "smoothcomp/nn/model.hpp"

namespace smoothcomp::nn {

enum class ScheduleKind { constant, cosine, warmup_cosine };

inline const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::cosine: return "cosine";
    case ScheduleKind::warmup_cosine: return "warmup_cosine";
  }
  return "?";
}

inline ScheduleKind schedule_from_string(const std::string& s) {
  if (s == "constant") return ScheduleKind::constant;
  if (s == "cosine") return ScheduleKind::cosine;
  if (s == "warmup_cosine") return ScheduleKind::warmup_cosine;
  throw ArgumentError("unknown schedule '" + s + "'");
}

/// Learning-rate schedule over optimizer steps.
struct Schedule {
  ScheduleKind kind = ScheduleKind::constant;
  /// Cosine horizon in steps; 0 means "all training steps".
  std::size_t total_steps = 0;
  /// Linear ramp from 0 to the base rate (warmup_cosine only).
  std::size_t warmup_steps = 0;
  /// Cosine end point as a fraction of the base rate.
  double min_factor = 0.0;

  double lr_at(std::size_t step, double base, std::size_t default_total) const {
    const std::size_t total = total_steps ? total_steps : default_total;
    switch (kind) {
      case ScheduleKind::constant: return base;
      case ScheduleKind::cosine: return cosine(step, total, base);
      case ScheduleKind::warmup_cosine:
        if (step < warmup_steps) return base * static_cast<double>(step) / static_cast<double>(warmup_steps);
        return cosine(step - warmup_steps, total > warmup_steps ? total - warmup_steps : 1, base);
    }
    return base;
  }

 private:
  double cosine(std::size_t step, std::size_t horizon, double base) const {
    const double floor = base * min_factor;
    if (horizon <= 1) return step == 0 ? base : floor;
    const double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(horizon - 1));
    return floor + (base - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
  }
};

enum class OptimizerKind { sgd, adam };

inline const char* to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw ArgumentError("unknown optimizer '" + s + "'");
}

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::sgd;
  double lr = 0.01;
  double momentum = 0.0;
  bool nesterov = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Decoupled decay: p -= lr * weight_decay * p at every step.
  double weight_decay = 0.0;
};

/// SGD (optionally with heavy-ball or Nesterov momentum) and Adam.
class Optimizer {
 public:
  Optimizer(OptimizerSettings settings, const Model& model) : s_(settings) {
    for (const auto& p : model.params()) {
      first_.push_back({Tensor(p.weight.shape()), p.bias.empty() ? Tensor() : Tensor(p.bias.shape())});
      if (s_.kind == OptimizerKind::adam)
        second_.push_back({Tensor(p.weight.shape()), p.bias.empty() ? Tensor() : Tensor(p.bias.shape())});
    }
  }

  void step(Model& model, const std::vector<ParamBlock>& grads, double lr) {
    ++t_;
    for (std::size_t slot : model.used_slots()) {
      update(model.params()[slot].weight, grads[slot].weight, slot, false, lr);
      if (!model.params()[slot].bias.empty()) update(model.params()[slot].bias, grads[slot].bias, slot, true, lr);
    }
  }

 private:
  void update(Tensor& p, const Tensor& g, std::size_t slot, bool bias, double lr) {
    Tensor& m = bias ? first_[slot].bias : first_[slot].weight;
    if (s_.weight_decay > 0.0) p *= (1.0 - lr * s_.weight_decay);
    if (s_.kind == OptimizerKind::sgd) {
      if (s_.momentum == 0.0) {
        p.axpy(-lr, g);
        return;
      }
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = s_.momentum * m[i] + g[i];
        const double d = s_.nesterov ? g[i] + s_.momentum * m[i] : m[i];
        p[i] -= lr * d;
      }
      return;
    }
    Tensor& v = bias ? second_[slot].bias : second_[slot].weight;
    const double c1 = 1.0 - std::pow(s_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(s_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = s_.beta1 * m[i] + (1.0 - s_.beta1) * g[i];
      v[i] = s_.beta2 * v[i] + (1.0 - s_.beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + s_.eps);
    }
  }

  OptimizerSettings s_;
  std::vector<ParamBlock> first_;
  std::vector<ParamBlock> second_;
  long t_ = 0;
};

}  // namespace smoothcomp::nn
