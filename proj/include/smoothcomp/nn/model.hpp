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

#include <cstddef>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "smoothcomp/errors.hpp"
#include "smoothcomp/linalg.hpp"
#include "smoothcomp/tensor.hpp"

namespace smoothcomp::nn {

enum class LayerKind { dense, conv2d, activation, flatten };

/// `identity` is the logits passthrough in front of a softmax loss.
enum class Activation { identity, relu, sine };

inline constexpr std::size_t kNoSlot = std::numeric_limits<std::size_t>::max();

/// One entry of a sequential network.
///
/// For dense layers `in`/`out` are feature counts, for conv2d they are
/// channel counts. Parameterized layers point at a parameter block through
/// `slot`; several layers may share a slot (tied weights after joint
/// compression).
struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  std::size_t in = 0;
  std::size_t out = 0;
  ConvGeometry geometry{};
  Activation activation = Activation::identity;
  double omega0 = 30.0;
  bool has_bias = true;
  std::size_t slot = kNoSlot;
  /// Set on layers produced by SVD compression; such layers are never re-factorized.
  bool factorized = false;

  static LayerSpec dense(std::size_t in, std::size_t out, bool bias = true) {
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.in = in;
    s.out = out;
    s.has_bias = bias;
    return s;
  }

  static LayerSpec conv2d(std::size_t in, std::size_t out, std::size_t kh, std::size_t kw, std::size_t stride = 1,
                          std::size_t pad = 0, bool bias = true) {
    LayerSpec s;
    s.kind = LayerKind::conv2d;
    s.in = in;
    s.out = out;
    s.geometry = ConvGeometry{kh, kw, stride, pad};
    s.has_bias = bias;
    return s;
  }

  static LayerSpec act(Activation a, double omega0 = 30.0) {
    LayerSpec s;
    s.kind = LayerKind::activation;
    s.activation = a;
    s.omega0 = omega0;
    s.has_bias = false;
    return s;
  }

  static LayerSpec flatten() {
    LayerSpec s;
    s.kind = LayerKind::flatten;
    s.has_bias = false;
    return s;
  }

  bool parameterized() const noexcept { return kind == LayerKind::dense || kind == LayerKind::conv2d; }

  Shape weight_shape() const {
    if (kind == LayerKind::dense) return {out, in};
    if (kind == LayerKind::conv2d) return {out, in, geometry.kernel_h, geometry.kernel_w};
    return {};
  }
};

struct ParamBlock {
  Tensor weight;
  Tensor bias;  ///< empty when the layer has no bias

  std::size_t count() const noexcept { return weight.size() + bias.size(); }
};

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::activation: return "activation";
    case LayerKind::flatten: return "flatten";
  }
  return "?";
}

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sine: return "sine";
  }
  return "?";
}

/// Sequential network: layer list plus parameter storage.
class Model {
 public:
  Model() = default;
  explicit Model(Shape input_shape) : input_shape_(std::move(input_shape)) {}

  const Shape& input_shape() const noexcept { return input_shape_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  std::vector<LayerSpec>& layers() noexcept { return layers_; }
  const LayerSpec& layer(std::size_t i) const { return layers_.at(i); }
  const std::vector<ParamBlock>& params() const noexcept { return params_; }
  std::vector<ParamBlock>& params() noexcept { return params_; }

  ParamBlock& block(std::size_t layer_index) { return params_.at(layers_.at(layer_index).slot); }
  const ParamBlock& block(std::size_t layer_index) const { return params_.at(layers_.at(layer_index).slot); }

  /// Append a layer; parameterized layers get a fresh zero-initialized block.
  std::size_t add(LayerSpec spec) {
    if (spec.parameterized()) {
      check_dims(spec);
      spec.slot = params_.size();
      ParamBlock b;
      b.weight = Tensor(spec.weight_shape());
      if (spec.has_bias) b.bias = Tensor({spec.out});
      params_.push_back(std::move(b));
    } else {
      spec.slot = kNoSlot;
    }
    layers_.push_back(spec);
    return layers_.size() - 1;
  }

  /// Append a parameterized layer that reuses an existing parameter block.
  std::size_t add_shared(LayerSpec spec, std::size_t slot) {
    if (!spec.parameterized() || slot >= params_.size()) throw ArgumentError("add_shared: invalid slot");
    if (params_[slot].weight.shape() != spec.weight_shape()) {
      throw DimensionError("add_shared: weight shape mismatch for shared slot");
    }
    spec.slot = slot;
    layers_.push_back(spec);
    return layers_.size() - 1;
  }

  /// Parameter blocks referenced by at least one layer, in first-use order.
  std::vector<std::size_t> used_slots() const {
    std::vector<std::size_t> slots;
    std::set<std::size_t> seen;
    for (const auto& l : layers_) {
      if (l.parameterized() && seen.insert(l.slot).second) slots.push_back(l.slot);
    }
    return slots;
  }

  /// Indices of parameterized layers.
  std::vector<std::size_t> parameterized_layers() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      if (layers_[i].parameterized()) idx.push_back(i);
    return idx;
  }

  /// Total trainable parameters; shared blocks are counted once.
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t s : used_slots()) n += params_[s].count();
    return n;
  }

  /// Per-sample shape entering each layer, plus the final output shape at the end.
  std::vector<Shape> shapes() const {
    std::vector<Shape> out;
    out.reserve(layers_.size() + 1);
    Shape cur = input_shape_;
    out.push_back(cur);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      cur = next_shape(layers_[i], cur, i);
      out.push_back(cur);
    }
    return out;
  }

  Shape output_shape() const { return shapes().back(); }

  /// Throws if consecutive layer shapes do not compose or blocks disagree with specs.
  void validate() const {
    (void)shapes();
    for (const auto& l : layers_) {
      if (!l.parameterized()) continue;
      if (l.slot >= params_.size()) throw ArgumentError("layer refers to missing parameter block");
      const auto& b = params_[l.slot];
      b.weight.require_shape(l.weight_shape(), "Model::validate");
      if (l.has_bias) {
        b.bias.require_shape({l.out}, "Model::validate");
      } else if (!b.bias.empty()) {
        throw DimensionError("Model::validate: bias present on bias-free layer");
      }
    }
  }

  bool operator==(const Model& o) const {
    if (input_shape_ != o.input_shape_ || layers_.size() != o.layers_.size() || params_.size() != o.params_.size())
      return false;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].weight != o.params_[i].weight || params_[i].bias != o.params_[i].bias) return false;
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto &a = layers_[i], &b = o.layers_[i];
      if (a.kind != b.kind || a.in != b.in || a.out != b.out || a.activation != b.activation ||
          a.omega0 != b.omega0 || a.has_bias != b.has_bias || a.slot != b.slot || a.factorized != b.factorized ||
          a.geometry.kernel_h != b.geometry.kernel_h || a.geometry.kernel_w != b.geometry.kernel_w ||
          a.geometry.stride != b.geometry.stride || a.geometry.pad != b.geometry.pad)
        return false;
    }
    return true;
  }

 private:
  static void check_dims(const LayerSpec& s) {
    if (s.in == 0 || s.out == 0) throw ArgumentError("layer dimensions must be positive");
    if (s.kind == LayerKind::conv2d &&
        (s.geometry.kernel_h == 0 || s.geometry.kernel_w == 0 || s.geometry.stride == 0))
      throw ArgumentError("conv2d kernel and stride must be positive");
  }

  static Shape next_shape(const LayerSpec& l, const Shape& cur, std::size_t i) {
    const std::string where = "layer " + std::to_string(i) + " (" + to_string(l.kind) + ")";
    switch (l.kind) {
      case LayerKind::dense:
        if (cur.size() != 1 || cur[0] != l.in)
          throw DimensionError(where + ": expects " + std::to_string(l.in) + " features, got " + shape_to_string(cur));
        return {l.out};
      case LayerKind::conv2d:
        if (cur.size() != 3 || cur[0] != l.in)
          throw DimensionError(where + ": expects " + std::to_string(l.in) + " channels, got " + shape_to_string(cur));
        return {l.out, l.geometry.out_h(cur[1]), l.geometry.out_w(cur[2])};
      case LayerKind::flatten:
        return {shape_product(cur)};
      case LayerKind::activation:
        return cur;
    }
    return cur;
  }

  Shape input_shape_;
  std::vector<LayerSpec> layers_;
  std::vector<ParamBlock> params_;
};

}  // namespace smoothcomp::nn
