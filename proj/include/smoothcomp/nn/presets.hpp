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
#include <vector>

#include "smoothcomp/nn/model.hpp"
#include "smoothcomp/rng.hpp"

namespace smoothcomp::nn {

/// Seeded initialization.
///
/// Layers fed by a sine activation get U(±sqrt(6/fan_in)/omega0); the first
/// layer in front of a sine gets U(±1/fan_in); every other weight and every
/// bias gets U(±sqrt(1/fan_in)).
inline void initialize(Model& model, std::uint64_t seed) {
  Rng rng(seed);
  const auto& layers = model.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (!l.parameterized()) continue;
    const std::size_t fan_in = model.params()[l.slot].weight.size() / l.out;
    const double fan = static_cast<double>(fan_in);

    const LayerSpec* prev_act = nullptr;
    for (std::size_t j = i; j-- > 0;) {
      if (layers[j].kind == LayerKind::activation) {
        prev_act = &layers[j];
        break;
      }
      if (layers[j].parameterized()) break;
    }
    bool feeds_sine = false;
    for (std::size_t j = i + 1; j < layers.size(); ++j) {
      if (layers[j].kind == LayerKind::activation) {
        feeds_sine = layers[j].activation == Activation::sine;
        break;
      }
      if (layers[j].parameterized()) break;
    }

    double bound = std::sqrt(1.0 / fan);
    if (prev_act && prev_act->activation == Activation::sine) {
      bound = std::sqrt(6.0 / fan) / prev_act->omega0;
    } else if (feeds_sine && !prev_act) {
      bound = 1.0 / fan;
    }
    ParamBlock& p = model.params()[l.slot];
    for (double& w : p.weight.data()) w = rng.uniform(-bound, bound);
    const double bias_bound = std::sqrt(1.0 / fan);
    for (double& b : p.bias.data()) b = rng.uniform(-bias_bound, bias_bound);
  }
}

struct InrPreset {
  std::size_t in_features = 2;
  std::size_t out_features = 3;
  std::size_t width = 256;
  std::size_t hidden_layers = 2;
  double omega0 = 30.0;
  double first_omega0 = 30.0;
};

/// Coordinate network: dense+sine, `hidden_layers` width x width dense+sine
/// blocks, then a linear readout.
inline Model make_inr(const InrPreset& p, std::uint64_t seed) {
  Model m({p.in_features});
  m.add(LayerSpec::dense(p.in_features, p.width));
  m.add(LayerSpec::act(Activation::sine, p.first_omega0));
  for (std::size_t i = 0; i < p.hidden_layers; ++i) {
    m.add(LayerSpec::dense(p.width, p.width));
    m.add(LayerSpec::act(Activation::sine, p.omega0));
  }
  m.add(LayerSpec::dense(p.width, p.out_features));
  initialize(m, seed);
  return m;
}

/// Indices of the width x width hidden layers of an INR model.
inline std::vector<std::size_t> inr_hidden_layers(const Model& m) {
  std::vector<std::size_t> idx;
  for (std::size_t i : m.parameterized_layers()) {
    const auto& l = m.layer(i);
    if (l.kind == LayerKind::dense && l.in == l.out && !l.factorized) idx.push_back(i);
  }
  return idx;
}

struct ClassifyPreset {
  std::size_t channels = 1;
  std::size_t height = 12;
  std::size_t width = 12;
  std::size_t classes = 2;
  std::vector<std::size_t> conv_widths{8, 16, 16};
};

/// Plain CNN: 3x3 conv + relu stacks (stride 1, then stride 2), flatten, dense head.
inline Model make_classifier(const ClassifyPreset& p, std::uint64_t seed) {
  Model m({p.channels, p.height, p.width});
  std::size_t in = p.channels;
  for (std::size_t i = 0; i < p.conv_widths.size(); ++i) {
    m.add(LayerSpec::conv2d(in, p.conv_widths[i], 3, 3, i == 0 ? 1 : 2, 1));
    m.add(LayerSpec::act(Activation::relu));
    in = p.conv_widths[i];
  }
  m.add(LayerSpec::flatten());
  const Shape feat = m.output_shape();
  m.add(LayerSpec::dense(feat[0], p.classes));
  m.add(LayerSpec::act(Activation::identity));
  initialize(m, seed);
  return m;
}

}  // namespace smoothcomp::nn
