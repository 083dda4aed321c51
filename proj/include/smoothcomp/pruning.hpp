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
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "smoothcomp/compress.hpp"
#include "smoothcomp/errors.hpp"
#include "smoothcomp/nn/model.hpp"
#include "smoothcomp/regularizers.hpp"

namespace smoothcomp::compress {

/// Output channels kept by structured pruning at sparsity s: ceil((1-s)*n_o), at least 1.
inline std::size_t channels_kept(std::size_t n_o, double s) {
  detail::check_sparsity(s, "channels_kept");
  const double keep = std::ceil((1.0 - s) * static_cast<double>(n_o) - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::max(0.0, keep)));
}

/// Channel indices removed from a layer: the lowest l1-norm rows of the
/// flattened weight, ties resolved towards the lower index. Returned sorted.
inline std::vector<std::size_t> channels_to_remove(const Tensor& weight, double s) {
  const Tensor flat = reg::flatten_for_reg(weight);
  const std::size_t n_o = flat.rows();
  std::vector<double> norms(n_o);
  for (std::size_t j = 0; j < n_o; ++j) norms[j] = l1_norm(flat.row(j));
  std::vector<std::size_t> order(n_o);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] < norms[b]; });
  const std::size_t remove = n_o - channels_kept(n_o, s);
  std::vector<std::size_t> out(order.begin(), order.begin() + static_cast<long>(remove));
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

/// Keep only the rows (leading-axis slices) of `t` whose index is not in `drop`.
inline Tensor drop_rows(const Tensor& t, const std::set<std::size_t>& drop) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < t.dim(0); ++i)
    if (!drop.count(i)) keep.push_back(i);
  Shape s = t.shape();
  s[0] = keep.size();
  const std::size_t stride = t.size() / t.dim(0);
  std::vector<double> data;
  data.reserve(keep.size() * stride);
  for (std::size_t i : keep) {
    auto r = t.row(i);
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor(std::move(s), std::move(data));
}

/// Remove input slices of a weight. `group` consecutive input columns (or
/// input channels, for conv) belong to one producer channel.
inline Tensor drop_inputs(const Tensor& w, const std::set<std::size_t>& channels, std::size_t group) {
  const std::size_t n_o = w.dim(0);
  const std::size_t per_out = w.size() / n_o;
  const std::size_t n_in = w.dim(1);
  const std::size_t inner = per_out / n_in;  // kernel area for conv, 1 for dense
  const std::size_t kept_in = n_in - channels.size() * group;
  Shape s = w.shape();
  s[1] = kept_in;
  std::vector<double> data;
  data.reserve(n_o * kept_in * inner);
  for (std::size_t o = 0; o < n_o; ++o) {
    for (std::size_t c = 0; c < n_in; ++c) {
      if (channels.count(c / group)) continue;
      const double* src = w.data().data() + o * per_out + c * inner;
      data.insert(data.end(), src, src + inner);
    }
  }
  return Tensor(std::move(s), std::move(data));
}

}  // namespace detail

/// Structured l1 pruning: for every parameterized layer but the last, drop
/// the lowest-norm output channels (and their biases) down to
/// ceil((1-s)*n_o), then remove the matching input slices of the next
/// parameterized layer. Norms come from the unpruned weights.
inline Compressed prune_structured_l1(const nn::Model& model, double s) {
  detail::check_sparsity(s, "prune_structured_l1");
  const auto t0 = std::chrono::steady_clock::now();
  const auto pl = model.parameterized_layers();
  {
    std::set<std::size_t> slots;
    for (std::size_t i : pl)
      if (!slots.insert(model.layer(i).slot).second)
        throw ArgumentError("prune_structured_l1: shared parameter blocks are not supported");
  }
  const auto shapes = model.shapes();

  std::vector<nn::LayerSpec> specs = model.layers();
  std::vector<nn::ParamBlock> blocks;
  for (std::size_t i : pl) blocks.push_back(model.block(i));

  Compressed out;
  out.report.method = "l1_structured";
  out.report.target = s;
  for (std::size_t k = 0; k + 1 < pl.size(); ++k) {
    const std::size_t li = pl[k];
    const auto removed = channels_to_remove(model.block(li).weight, s);
    LayerPlan lp;
    lp.members = {li};
    lp.target = s;
    lp.max_rank = model.layer(li).out;
    lp.rank = model.layer(li).out - removed.size();
    lp.params_before = model.block(li).count();
    if (!removed.empty()) {
      const std::set<std::size_t> drop(removed.begin(), removed.end());
      blocks[k].weight = detail::drop_rows(blocks[k].weight, drop);
      if (!blocks[k].bias.empty()) blocks[k].bias = detail::drop_rows(blocks[k].bias, drop);
      specs[li].out -= removed.size();

      const std::size_t ci = pl[k + 1];
      const Shape& consumer_in = shapes[ci];
      // a flatten between conv and dense turns each channel into h*w features
      const std::size_t group =
          (specs[ci].kind == nn::LayerKind::dense && model.layer(li).kind == nn::LayerKind::conv2d)
              ? consumer_in[0] / model.layer(li).out
              : 1;
      blocks[k + 1].weight = detail::drop_inputs(blocks[k + 1].weight, drop, group);
      specs[ci].in -= removed.size() * group;
    }
    lp.params_after = blocks[k].count();
    lp.achieved_sparsity = sparsity(lp.params_before, lp.params_after);
    out.report.plan.layers.push_back(std::move(lp));
  }

  nn::Model pruned(model.input_shape());
  std::size_t k = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const std::size_t idx = pruned.add(specs[i]);
    if (specs[i].parameterized()) pruned.block(idx) = std::move(blocks[k++]);
  }
  pruned.validate();
  out.model = std::move(pruned);
  out.report.plan.params_before = model.parameter_count();
  out.report.plan.params_after = out.model.parameter_count();
  out.report.plan.achieved_sparsity = sparsity(out.report.plan.params_before, out.report.plan.params_after);
  out.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Number of weight entries zeroed by unstructured pruning: round-half-up of p * total.
inline std::size_t entries_to_zero(std::size_t total, double p) {
  detail::check_sparsity(p, "entries_to_zero");
  return std::min(total, static_cast<std::size_t>(std::floor(p * static_cast<double>(total) + 0.5 + 1e-9)));
}

/// Unstructured l1 pruning: global magnitude ranking over all weight
/// entries (biases exempt); the smallest round(p * total) are set to zero,
/// ties resolved towards the lower flat index.
inline Compressed prune_unstructured_l1(const nn::Model& model, double p) {
  detail::check_sparsity(p, "prune_unstructured_l1");
  const auto t0 = std::chrono::steady_clock::now();
  nn::Model pruned = model;
  const auto slots = pruned.used_slots();
  std::vector<double*> entries;
  for (std::size_t s : slots)
    for (double& w : pruned.params()[s].weight.data()) entries.push_back(&w);
  const std::size_t z = entries_to_zero(entries.size(), p);
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(*entries[a]) < std::abs(*entries[b]); });
  for (std::size_t i = 0; i < z; ++i) *entries[order[i]] = 0.0;

  Compressed out;
  out.report.method = "l1_unstructured";
  out.report.target = p;
  LayerPlan lp;
  lp.target = p;
  lp.params_before = model.parameter_count();
  lp.params_after = lp.params_before - z;
  lp.achieved_sparsity = sparsity(lp.params_before, lp.params_after);
  out.report.plan.layers.push_back(lp);
  out.report.plan.params_before = lp.params_before;
  out.report.plan.params_after = lp.params_after;
  out.report.plan.achieved_sparsity = lp.achieved_sparsity;
  out.model = std::move(pruned);
  out.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace smoothcomp::compress
