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
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "smoothcomp/errors.hpp"
#include "smoothcomp/linalg.hpp"
#include "smoothcomp/nn/model.hpp"
#include "smoothcomp/regularizers.hpp"
#include "smoothcomp/tensor.hpp"

namespace smoothcomp::compress {

// ---------------------------------------------------------------------------
// rank from target sparsity
// ---------------------------------------------------------------------------

namespace detail {

inline void check_sparsity(double s, const char* op) {
  if (!(s >= 0.0 && s <= 1.0)) throw ArgumentError(std::string(op) + ": sparsity must lie in [0, 1]");
}

/// Round half up, then clamp to [1, max_rank]. The 1e-9 nudge absorbs
/// representation error of values that are exact halves in decimal.
inline std::size_t round_and_clamp(double x, std::size_t max_rank) {
  const double r = std::floor(x + 0.5 + 1e-9);
  if (r < 1.0) return 1;
  if (r > static_cast<double>(max_rank)) return max_rank;
  return static_cast<std::size_t>(r);
}

}  // namespace detail

/// Rank for a dense layer (n_i inputs, n_o outputs, with bias) such that
/// the factor pair has sparsity `s` relative to the original layer.
inline std::size_t rank_for_sparsity_dense(std::size_t n_i, std::size_t n_o, double s) {
  detail::check_sparsity(s, "rank_for_sparsity_dense");
  const double ni = static_cast<double>(n_i), no = static_cast<double>(n_o);
  const double r = ((1.0 - s) * (ni * no + no) - no) / (ni + no);
  return detail::round_and_clamp(r, std::min(n_i, n_o));
}

/// Rank for a conv layer with an n_o x n_i x h x w kernel.
inline std::size_t rank_for_sparsity_conv(std::size_t n_i, std::size_t n_o, std::size_t h, std::size_t w, double s) {
  detail::check_sparsity(s, "rank_for_sparsity_conv");
  const double fan = static_cast<double>(n_i * h * w), no = static_cast<double>(n_o);
  const double r = ((1.0 - s) * (no * fan + no) - no) / (fan + no);
  return detail::round_and_clamp(r, std::min(n_o, n_i * h * w));
}

/// Parameters of a rank-r factor pair replacing a layer with `fan_in`
/// inputs per output (n_i or n_i*h*w) and `n_o` outputs.
inline std::size_t factored_param_count(std::size_t fan_in, std::size_t n_o, std::size_t r, bool bias = true) {
  return r * (fan_in + n_o) + (bias ? n_o : 0);
}

inline double sparsity(std::size_t before, std::size_t after) {
  return 1.0 - static_cast<double>(after) / static_cast<double>(before);
}

// ---------------------------------------------------------------------------
// plan / report
// ---------------------------------------------------------------------------

struct LayerPlan {
  /// Layer indices in the source model (several for a joint stack).
  std::vector<std::size_t> members;
  double target = 0.0;
  std::size_t rank = 0;
  std::size_t max_rank = 0;
  std::size_t params_before = 0;
  std::size_t params_after = 0;
  double achieved_sparsity = 0.0;
  /// Frobenius norm of W - W_r on the flattened (stacked) weight.
  double reconstruction_error = 0.0;
  /// Left untouched because factorizing would add parameters.
  bool skipped = false;
};

struct CompressionPlan {
  std::vector<LayerPlan> layers;
  std::size_t params_before = 0;
  std::size_t params_after = 0;
  double achieved_sparsity = 0.0;
};

struct CompressionReport {
  std::string method;
  double target = 0.0;
  CompressionPlan plan;
  double metric_before = std::numeric_limits<double>::quiet_NaN();
  double metric_after = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct Compressed {
  nn::Model model;
  CompressionReport report;
};

struct CompressOptions {
  /// Keep a layer as-is when its factor pair would hold more parameters.
  bool skip_when_larger = false;
};

// ---------------------------------------------------------------------------
// model surgery
// ---------------------------------------------------------------------------

/// Copies layers of `src` into a fresh model while keeping parameter sharing.
class Rebuilder {
 public:
  explicit Rebuilder(const nn::Model& src) : src_(src), dst_(src.input_shape()) {}

  void copy(std::size_t i) {
    const nn::LayerSpec& l = src_.layer(i);
    if (!l.parameterized()) {
      dst_.add(l);
      return;
    }
    auto it = slots_.find(l.slot);
    if (it != slots_.end()) {
      dst_.add_shared(l, it->second);
      return;
    }
    const std::size_t idx = dst_.add(l);
    dst_.block(idx) = src_.block(i);
    slots_[l.slot] = dst_.layer(idx).slot;
  }

  std::size_t add(const nn::LayerSpec& l, nn::ParamBlock p) {
    const std::size_t idx = dst_.add(l);
    dst_.block(idx) = std::move(p);
    return idx;
  }

  std::size_t add_shared(const nn::LayerSpec& l, std::size_t slot) { return dst_.add_shared(l, slot); }

  nn::Model& model() { return dst_; }

  nn::Model finish() {
    dst_.validate();
    return std::move(dst_);
  }

 private:
  const nn::Model& src_;
  nn::Model dst_;
  std::map<std::size_t, std::size_t> slots_;
};

/// Two layers replacing one: project (rank-r, no bias) then expand (original bias).
struct FactorPair {
  nn::LayerSpec first;
  nn::ParamBlock first_params;
  nn::LayerSpec second;
  nn::ParamBlock second_params;
  double reconstruction_error = 0.0;
};

namespace detail {

inline void require_factorizable(const nn::Model& m, std::size_t layer, nn::LayerKind kind) {
  const nn::LayerSpec& l = m.layer(layer);
  if (l.kind != kind) throw ArgumentError("layer " + std::to_string(layer) + " is not " + nn::to_string(kind));
  if (l.factorized) throw ArgumentError("layer " + std::to_string(layer) + " is already factorized");
}

inline double residual(const Tensor& w, const LowRankPair& pair) {
  return frobenius_norm(w - matmul(pair.expand, pair.project));
}

}  // namespace detail

inline FactorPair factorize_dense(const nn::LayerSpec& l, const nn::ParamBlock& p, std::size_t r) {
  const std::size_t max_rank = std::min(l.in, l.out);
  if (r < 1 || r > max_rank) {
    throw ArgumentError("compress_dense: rank " + std::to_string(r) + " outside [1, " + std::to_string(max_rank) + "]");
  }
  const LowRankPair pair = truncate(svd(p.weight), r);
  FactorPair f;
  f.first = nn::LayerSpec::dense(l.in, r, false);
  f.first.factorized = true;
  f.first_params.weight = pair.project;
  f.second = nn::LayerSpec::dense(r, l.out, l.has_bias);
  f.second.factorized = true;
  f.second_params.weight = pair.expand;
  f.second_params.bias = p.bias;
  f.reconstruction_error = detail::residual(p.weight, pair);
  return f;
}

inline FactorPair factorize_conv(const nn::LayerSpec& l, const nn::ParamBlock& p, std::size_t r) {
  const std::size_t fan = l.in * l.geometry.kernel_h * l.geometry.kernel_w;
  const std::size_t max_rank = std::min(l.out, fan);
  if (r < 1 || r > max_rank) {
    throw ArgumentError("compress_conv: rank " + std::to_string(r) + " outside [1, " + std::to_string(max_rank) + "]");
  }
  const Tensor flat = reg::flatten_for_reg(p.weight);
  const LowRankPair pair = truncate(svd(flat), r);
  FactorPair f;
  f.first = nn::LayerSpec::conv2d(l.in, r, l.geometry.kernel_h, l.geometry.kernel_w, l.geometry.stride, l.geometry.pad,
                                  false);
  f.first.factorized = true;
  f.first_params.weight = pair.project.reshaped(f.first.weight_shape());
  f.second = nn::LayerSpec::conv2d(r, l.out, 1, 1, 1, 0, l.has_bias);
  f.second.factorized = true;
  f.second_params.weight = pair.expand.reshaped(f.second.weight_shape());
  f.second_params.bias = p.bias;
  f.reconstruction_error = detail::residual(flat, pair);
  return f;
}

namespace detail {

inline nn::Model replace_with_pair(const nn::Model& model, std::size_t layer, FactorPair pair) {
  if (model.layer(layer).slot != nn::kNoSlot) {
    std::size_t uses = 0;
    for (const auto& l : model.layers())
      if (l.parameterized() && l.slot == model.layer(layer).slot) ++uses;
    if (uses > 1) throw ArgumentError("cannot factorize a layer with shared parameters");
  }
  Rebuilder rb(model);
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    if (i != layer) {
      rb.copy(i);
      continue;
    }
    rb.add(pair.first, std::move(pair.first_params));
    rb.add(pair.second, std::move(pair.second_params));
  }
  return rb.finish();
}

}  // namespace detail

/// Replace dense layer `layer` by its rank-r factor pair.
inline nn::Model compress_dense(const nn::Model& model, std::size_t layer, std::size_t r) {
  detail::require_factorizable(model, layer, nn::LayerKind::dense);
  return detail::replace_with_pair(model, layer, factorize_dense(model.layer(layer), model.block(layer), r));
}

/// Replace conv layer `layer` by a rank-r conv (original geometry) followed by a 1x1 conv.
inline nn::Model compress_conv(const nn::Model& model, std::size_t layer, std::size_t r) {
  detail::require_factorizable(model, layer, nn::LayerKind::conv2d);
  return detail::replace_with_pair(model, layer, factorize_conv(model.layer(layer), model.block(layer), r));
}

/// Largest admissible rank of a parameterized layer's flattened weight.
inline std::size_t max_rank(const nn::LayerSpec& l) {
  if (l.kind == nn::LayerKind::dense) return std::min(l.in, l.out);
  return std::min(l.out, l.in * l.geometry.kernel_h * l.geometry.kernel_w);
}

inline std::size_t rank_for_layer(const nn::LayerSpec& l, double s) {
  if (l.kind == nn::LayerKind::dense) return rank_for_sparsity_dense(l.in, l.out, s);
  return rank_for_sparsity_conv(l.in, l.out, l.geometry.kernel_h, l.geometry.kernel_w, s);
}

/// Factorize every dense and conv layer at uniform target sparsity. With
/// `ranks` non-empty it overrides the per-layer rank (one entry per
/// parameterized layer, in order; 0 = use the sparsity formula).
inline Compressed compress_model(const nn::Model& model, double target, const CompressOptions& opt = {},
                                 const std::vector<std::size_t>& ranks = {}) {
  detail::check_sparsity(target, "compress_model");
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& l : model.layers()) {
    if (l.factorized) throw ArgumentError("compress_model: model already contains factorized layers");
  }
  const auto param_layers = model.parameterized_layers();
  if (!ranks.empty() && ranks.size() != param_layers.size()) {
    throw ArgumentError("compress_model: rank override count differs from parameterized layer count");
  }

  Compressed out;
  out.report.method = "svd";
  out.report.target = target;
  Rebuilder rb(model);
  std::size_t pi = 0;
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const nn::LayerSpec& l = model.layer(i);
    if (!l.parameterized()) {
      rb.copy(i);
      continue;
    }
    LayerPlan lp;
    lp.members = {i};
    lp.target = target;
    lp.max_rank = max_rank(l);
    lp.rank = (!ranks.empty() && ranks[pi] != 0) ? ranks[pi] : rank_for_layer(l, target);
    ++pi;
    const std::size_t fan = model.block(i).weight.size() / l.out;
    lp.params_before = model.block(i).count();
    lp.params_after = factored_param_count(fan, l.out, lp.rank, l.has_bias);
    if (opt.skip_when_larger && lp.params_after > lp.params_before) {
      lp.skipped = true;
      lp.params_after = lp.params_before;
      lp.rank = lp.max_rank;
      rb.copy(i);
    } else {
      FactorPair pair = l.kind == nn::LayerKind::dense ? factorize_dense(l, model.block(i), lp.rank)
                                                       : factorize_conv(l, model.block(i), lp.rank);
      lp.reconstruction_error = pair.reconstruction_error;
      rb.add(pair.first, std::move(pair.first_params));
      rb.add(pair.second, std::move(pair.second_params));
    }
    lp.achieved_sparsity = sparsity(lp.params_before, lp.params_after);
    out.report.plan.layers.push_back(std::move(lp));
  }
  out.model = rb.finish();
  out.report.plan.params_before = model.parameter_count();
  out.report.plan.params_after = out.model.parameter_count();
  out.report.plan.achieved_sparsity = sparsity(out.report.plan.params_before, out.report.plan.params_after);
  out.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Joint factorization of several dense layers with a common input width n.
///
/// Their weights are stacked vertically into a (sum n_o) x n matrix; one SVD
/// yields a shared projection diag(sigma_r) V_rᵀ (r x n, stored once, no bias)
/// and, per layer, its row slice of U_r (n_o x r) with the original bias.
inline Compressed compress_joint_stacked(const nn::Model& model, const std::vector<std::size_t>& layers,
                                         std::size_t r) {
  const auto t0 = std::chrono::steady_clock::now();
  if (layers.empty()) throw ArgumentError("compress_joint_stacked: no layers given");
  std::vector<std::size_t> sorted = layers;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ArgumentError("compress_joint_stacked: duplicate layer index");
  const std::size_t n = model.layer(sorted.front()).in;
  std::size_t total_out = 0;
  for (std::size_t i : sorted) {
    detail::require_factorizable(model, i, nn::LayerKind::dense);
    if (model.layer(i).in != n) throw ArgumentError("compress_joint_stacked: layers have different input widths");
    total_out += model.layer(i).out;
  }
  const std::size_t max_r = std::min(total_out, n);
  if (r < 1 || r > max_r) {
    throw ArgumentError("compress_joint_stacked: rank " + std::to_string(r) + " outside [1, " + std::to_string(max_r) +
                        "]");
  }

  Tensor stacked({total_out, n});
  {
    std::size_t row = 0;
    for (std::size_t i : sorted) {
      const Tensor& w = model.block(i).weight;
      std::copy(w.data().begin(), w.data().end(), stacked.data().begin() + static_cast<long>(row * n));
      row += w.rows();
    }
  }
  const LowRankPair pair = truncate(svd(stacked), r);

  Compressed out;
  out.report.method = "svd_joint";
  LayerPlan lp;
  lp.members = sorted;
  lp.rank = r;
  lp.max_rank = max_r;
  lp.reconstruction_error = detail::residual(stacked, pair);
  for (std::size_t i : sorted) lp.params_before += model.block(i).count();

  Rebuilder rb(model);
  std::size_t shared_slot = nn::kNoSlot;
  std::size_t row = 0;
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    if (!std::binary_search(sorted.begin(), sorted.end(), i)) {
      rb.copy(i);
      continue;
    }
    const nn::LayerSpec& l = model.layer(i);
    nn::LayerSpec proj = nn::LayerSpec::dense(n, r, false);
    proj.factorized = true;
    if (shared_slot == nn::kNoSlot) {
      const std::size_t idx = rb.add(proj, nn::ParamBlock{pair.project, Tensor()});
      shared_slot = rb.model().layer(idx).slot;
    } else {
      rb.add_shared(proj, shared_slot);
    }
    nn::LayerSpec expand = nn::LayerSpec::dense(r, l.out, l.has_bias);
    expand.factorized = true;
    Tensor slice({l.out, r});
    for (std::size_t a = 0; a < l.out; ++a)
      for (std::size_t b = 0; b < r; ++b) slice(a, b) = pair.expand(row + a, b);
    row += l.out;
    rb.add(expand, nn::ParamBlock{std::move(slice), model.block(i).bias});
    lp.params_after += l.out * r + model.block(i).bias.size();
  }
  lp.params_after += r * n;
  lp.achieved_sparsity = sparsity(lp.params_before, lp.params_after);
  out.model = rb.finish();
  out.report.plan.layers.push_back(std::move(lp));
  out.report.plan.params_before = model.parameter_count();
  out.report.plan.params_after = out.model.parameter_count();
  out.report.plan.achieved_sparsity = sparsity(out.report.plan.params_before, out.report.plan.params_after);
  out.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Rank for a joint stack at target sparsity `s` measured over the stacked layers.
inline std::size_t rank_for_sparsity_joint(const nn::Model& model, const std::vector<std::size_t>& layers, double s) {
  if (layers.empty()) throw ArgumentError("rank_for_sparsity_joint: no layers given");
  std::size_t total_out = 0;
  for (std::size_t i : layers) total_out += model.layer(i).out;
  return rank_for_sparsity_dense(model.layer(layers.front()).in, total_out, s);
}

}  // namespace smoothcomp::compress
