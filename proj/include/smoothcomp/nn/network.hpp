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
#include <string>
#include <vector>

#include "smoothcomp/errors.hpp"
#include "smoothcomp/linalg.hpp"
#include "smoothcomp/nn/model.hpp"
#include "smoothcomp/tensor.hpp"

namespace smoothcomp::nn {

/// Layer inputs recorded during a forward pass, consumed by `backward`.
struct ForwardTrace {
  std::vector<Tensor> inputs;
};

namespace detail {

inline Shape batched(std::size_t batch, const Shape& sample) {
  Shape s{batch};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

inline Tensor dense_forward(const LayerSpec& l, const ParamBlock& p, const Tensor& x) {
  Tensor y = matmul_nt(x, p.weight);
  if (l.has_bias) {
    const std::size_t b = y.rows();
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < l.out; ++j) y(i, j) += p.bias[j];
  }
  return y;
}

inline Tensor conv_forward(const LayerSpec& l, const ParamBlock& p, const Tensor& x) {
  const std::size_t batch = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = l.geometry.out_h(h), ow = l.geometry.out_w(w);
  const std::size_t k = c * l.geometry.kernel_h * l.geometry.kernel_w, npos = oh * ow;
  const Tensor wflat = p.weight.reshaped({l.out, k});
  Tensor y({batch, l.out, oh, ow});
  Tensor cols({k, npos});
  const std::size_t in_stride = c * h * w, out_stride = l.out * npos;
  for (std::size_t b = 0; b < batch; ++b) {
    im2col(x.data().subspan(b * in_stride, in_stride), c, h, w, l.geometry, cols.data());
    const Tensor yb = matmul(wflat, cols);
    double* dst = y.data().data() + b * out_stride;
    for (std::size_t o = 0; o < l.out; ++o) {
      const double bias = l.has_bias ? p.bias[o] : 0.0;
      for (std::size_t q = 0; q < npos; ++q) dst[o * npos + q] = yb(o, q) + bias;
    }
  }
  return y;
}

inline Tensor activation_forward(const LayerSpec& l, const Tensor& x) {
  Tensor y = x;
  switch (l.activation) {
    case Activation::identity: break;
    case Activation::relu:
      for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::sine:
      for (double& v : y.data()) v = std::sin(l.omega0 * v);
      break;
  }
  return y;
}

}  // namespace detail

/// Evaluate one layer on a batch.
inline Tensor layer_forward(const Model& model, std::size_t i, const Tensor& x) {
  const LayerSpec& l = model.layer(i);
  switch (l.kind) {
    case LayerKind::dense: return detail::dense_forward(l, model.block(i), x);
    case LayerKind::conv2d: return detail::conv_forward(l, model.block(i), x);
    case LayerKind::activation: return detail::activation_forward(l, x);
    case LayerKind::flatten: return x.reshaped({x.dim(0), x.size() / x.dim(0)});
  }
  return x;
}

/// Batched forward pass. `x` has shape batch x model.input_shape().
///
/// With `trace` set, every layer input is recorded for `backward` and each
/// layer output is checked for non-finite values.
inline Tensor forward(const Model& model, const Tensor& x, ForwardTrace* trace = nullptr) {
  if (x.rank() != model.input_shape().size() + 1 ||
      Shape(x.shape().begin() + 1, x.shape().end()) != model.input_shape()) {
    throw DimensionError("forward: input shape " + shape_to_string(x.shape()) + " does not match model input " +
                         shape_to_string(model.input_shape()));
  }
  if (trace) trace->inputs.clear();
  Tensor cur = x;
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    if (trace) trace->inputs.push_back(cur);
    cur = layer_forward(model, i, cur);
    if (trace) {
      for (double v : cur.data()) {
        if (!std::isfinite(v)) {
          throw NumericError("non-finite activation at output of layer " + std::to_string(i) + " (" +
                             to_string(model.layer(i).kind) + ")");
        }
      }
    }
  }
  return cur;
}

/// Gradient buffers shaped like `model.params()`.
inline std::vector<ParamBlock> zero_grads(const Model& model) {
  std::vector<ParamBlock> g;
  g.reserve(model.params().size());
  for (const auto& p : model.params()) {
    ParamBlock z;
    z.weight = Tensor(p.weight.shape());
    if (!p.bias.empty()) z.bias = Tensor(p.bias.shape());
    g.push_back(std::move(z));
  }
  return g;
}

/// Reverse-mode pass: accumulates parameter gradients of a scalar whose
/// gradient w.r.t. the network output is `grad_out`. Returns the gradient
/// w.r.t. the network input.
inline Tensor backward(const Model& model, const ForwardTrace& trace, Tensor grad_out,
                       std::vector<ParamBlock>& grads) {
  if (trace.inputs.size() != model.layers().size()) throw ArgumentError("backward: trace does not match model");
  for (std::size_t idx = model.layers().size(); idx-- > 0;) {
    const LayerSpec& l = model.layer(idx);
    const Tensor& x = trace.inputs[idx];
    switch (l.kind) {
      case LayerKind::dense: {
        const ParamBlock& p = model.block(idx);
        ParamBlock& g = grads[l.slot];
        g.weight += matmul_tn(grad_out, x);
        if (l.has_bias) {
          for (std::size_t i = 0; i < grad_out.rows(); ++i)
            for (std::size_t j = 0; j < l.out; ++j) g.bias[j] += grad_out(i, j);
        }
        grad_out = matmul(grad_out, p.weight);
        break;
      }
      case LayerKind::conv2d: {
        const ParamBlock& p = model.block(idx);
        ParamBlock& g = grads[l.slot];
        const std::size_t batch = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        const std::size_t oh = l.geometry.out_h(h), ow = l.geometry.out_w(w);
        const std::size_t k = c * l.geometry.kernel_h * l.geometry.kernel_w, npos = oh * ow;
        const Tensor wflat = p.weight.reshaped({l.out, k});
        Tensor gw({l.out, k});
        Tensor gx(x.shape());
        Tensor cols({k, npos});
        const std::size_t in_stride = c * h * w, out_stride = l.out * npos;
        for (std::size_t b = 0; b < batch; ++b) {
          im2col(x.data().subspan(b * in_stride, in_stride), c, h, w, l.geometry, cols.data());
          Tensor gy({l.out, npos},
                    std::vector<double>(grad_out.data().begin() + static_cast<long>(b * out_stride),
                                        grad_out.data().begin() + static_cast<long>((b + 1) * out_stride)));
          gw += matmul_nt(gy, cols);
          if (l.has_bias) {
            for (std::size_t o = 0; o < l.out; ++o)
              for (std::size_t q = 0; q < npos; ++q) g.bias[o] += gy(o, q);
          }
          const Tensor gcols = matmul_tn(wflat, gy);
          col2im(gcols.data(), c, h, w, l.geometry, gx.data().subspan(b * in_stride, in_stride));
        }
        g.weight += gw.reshaped(l.weight_shape());
        grad_out = std::move(gx);
        break;
      }
      case LayerKind::activation: {
        switch (l.activation) {
          case Activation::identity: break;
          case Activation::relu:
            for (std::size_t i = 0; i < grad_out.size(); ++i)
              if (!(x[i] > 0.0)) grad_out[i] = 0.0;
            break;
          case Activation::sine:
            for (std::size_t i = 0; i < grad_out.size(); ++i) grad_out[i] *= l.omega0 * std::cos(l.omega0 * x[i]);
            break;
        }
        break;
      }
      case LayerKind::flatten:
        grad_out = grad_out.reshaped(x.shape());
        break;
    }
  }
  return grad_out;
}

}  // namespace smoothcomp::nn
