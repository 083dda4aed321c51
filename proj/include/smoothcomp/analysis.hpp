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
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "smoothcomp/errors.hpp"
#include "smoothcomp/linalg.hpp"
#include "smoothcomp/nn/loss.hpp"
#include "smoothcomp/nn/model.hpp"
#include "smoothcomp/nn/network.hpp"
#include "smoothcomp/regularizers.hpp"

namespace smoothcomp::analysis {

/// "%.6g" formatting, independent of the global locale.
inline std::string fmt6(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct LayerSpectrum {
  std::size_t layer = 0;
  std::string name;
  std::vector<double> sigma;
  /// cumulative[k-1] = c(k)
  std::vector<double> cumulative;
  /// non-empty if the SVD failed; sigma/cumulative are then empty
  std::string error;
};

struct SpectrumReport {
  std::vector<LayerSpectrum> layers;
  bool energy = false;
};

/// c(k) = sum_{i<=k} sigma_i / sum_i sigma_i (or with sigma^2 when `energy`).
/// An all-zero spectrum yields c(k) = 1.
inline std::vector<double> cumulative_percentage(const std::vector<double>& sigma, bool energy = false) {
  std::vector<double> c(sigma.size());
  double total = 0.0;
  for (double s : sigma) total += energy ? s * s : s;
  double run = 0.0;
  for (std::size_t k = 0; k < sigma.size(); ++k) {
    run += energy ? sigma[k] * sigma[k] : sigma[k];
    c[k] = total > 0.0 ? run / total : 1.0;
  }
  if (!c.empty()) c.back() = 1.0;
  return c;
}

inline std::string layer_name(const nn::Model& m, std::size_t i) {
  return "layer" + std::to_string(i) + "." + nn::to_string(m.layer(i).kind);
}

/// Spectra of the flattened weights of every parameterized layer.
inline SpectrumReport spectrum(const nn::Model& model, bool energy = false) {
  SpectrumReport rep;
  rep.energy = energy;
  for (std::size_t i : model.parameterized_layers()) {
    LayerSpectrum ls;
    ls.layer = i;
    ls.name = layer_name(model, i);
    try {
      ls.sigma = singular_values(reg::flatten_for_reg(model.block(i).weight));
      ls.cumulative = cumulative_percentage(ls.sigma, energy);
    } catch (const Error& e) {
      ls.error = e.what();
    }
    rep.layers.push_back(std::move(ls));
  }
  return rep;
}

/// c(k) at k = max(1, round(fraction * max_rank)) per layer, averaged over layers.
inline double mean_cumulative_at_fraction(const SpectrumReport& rep, double fraction) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& l : rep.layers) {
    if (l.cumulative.empty()) continue;
    const double m = static_cast<double>(l.cumulative.size());
    std::size_t k = static_cast<std::size_t>(std::floor(fraction * m + 0.5));
    k = std::clamp<std::size_t>(k, 1, l.cumulative.size());
    sum += l.cumulative[k - 1];
    ++n;
  }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

/// Mean curve over layers; layers shorter than k contribute 1.
inline std::vector<double> mean_cumulative_curve(const SpectrumReport& rep) {
  std::size_t len = 0;
  std::size_t n = 0;
  for (const auto& l : rep.layers) {
    len = std::max(len, l.cumulative.size());
    if (!l.cumulative.empty()) ++n;
  }
  std::vector<double> mean(len, 0.0);
  for (const auto& l : rep.layers) {
    if (l.cumulative.empty()) continue;
    for (std::size_t k = 0; k < len; ++k) mean[k] += k < l.cumulative.size() ? l.cumulative[k] : 1.0;
  }
  for (double& v : mean) v /= static_cast<double>(n ? n : 1);
  return mean;
}

/// Columns: layer,name,index,sigma,cumulative. Per-layer rows first, then
/// rows with layer "mean" and an empty sigma column. Failed layers get one
/// row with the error message in the name column.
inline std::string spectrum_csv(const SpectrumReport& rep) {
  std::ostringstream os;
  os << "layer,name,index,sigma,cumulative\n";
  for (const auto& l : rep.layers) {
    if (!l.error.empty()) {
      os << l.layer << ",error: " << l.error << ",,,\n";
      continue;
    }
    for (std::size_t k = 0; k < l.sigma.size(); ++k) {
      os << l.layer << ',' << l.name << ',' << (k + 1) << ',' << fmt6(l.sigma[k]) << ',' << fmt6(l.cumulative[k])
         << '\n';
    }
  }
  const auto mean = mean_cumulative_curve(rep);
  for (std::size_t k = 0; k < mean.size(); ++k) os << "mean,mean," << (k + 1) << ",," << fmt6(mean[k]) << '\n';
  return os.str();
}

/// Kernels of one input channel of a conv layer: row j is output channel j,
/// holding its h x w kernel in row-major order.
struct WeightSlice {
  std::size_t layer = 0;
  std::size_t input_channel = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  Tensor kernels;  ///< n_o x (kernel_h * kernel_w)
};

inline WeightSlice export_weight_slice(const nn::Model& model, std::size_t layer, std::size_t input_channel) {
  const nn::LayerSpec& l = model.layer(layer);
  if (l.kind != nn::LayerKind::conv2d) throw ArgumentError("export_weight_slice: layer is not a convolution");
  if (input_channel >= l.in) throw ArgumentError("export_weight_slice: input channel out of range");
  const Tensor& w = model.block(layer).weight;
  const std::size_t kh = l.geometry.kernel_h, kw = l.geometry.kernel_w;
  WeightSlice s{layer, input_channel, kh, kw, Tensor({l.out, kh * kw})};
  for (std::size_t o = 0; o < l.out; ++o)
    for (std::size_t q = 0; q < kh * kw; ++q) s.kernels(o, q) = w[(o * l.in + input_channel) * kh * kw + q];
  return s;
}

/// Tiles run left to right, top to bottom on a grid `ceil(sqrt(n_o))` wide;
/// each row carries its tile position next to the kernel values.
inline std::string weight_slice_csv(const WeightSlice& s) {
  const std::size_t n_o = s.kernels.rows();
  const auto grid = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_o))));
  std::ostringstream os;
  os << "output_channel,grid_row,grid_col";
  for (std::size_t y = 0; y < s.kernel_h; ++y)
    for (std::size_t x = 0; x < s.kernel_w; ++x) os << ",k" << y << '_' << x;
  os << '\n';
  for (std::size_t o = 0; o < n_o; ++o) {
    os << o << ',' << o / grid << ',' << o % grid;
    for (std::size_t q = 0; q < s.kernel_h * s.kernel_w; ++q) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", s.kernels(o, q));
      os << ',' << buf;
    }
    os << '\n';
  }
  return os.str();
}

/// Inverse of `weight_slice_csv` (kernel values only).
inline Tensor parse_weight_slice_csv(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  if (!std::getline(is, line)) throw ArgumentError("weight slice csv: missing header");
  const std::size_t cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (cols < 3) throw ArgumentError("weight slice csv: header has no kernel columns");
  const std::size_t width = cols - 2;
  std::vector<double> data;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ls, cell, ',')) {
      if (c >= 3) data.push_back(std::stod(cell));
      ++c;
    }
    if (c != cols + 1) throw ArgumentError("weight slice csv: ragged row " + std::to_string(rows));
    ++rows;
  }
  if (rows == 0) throw ArgumentError("weight slice csv: no rows");
  return Tensor({rows, width}, std::move(data));
}

/// 10 log10(1 / MSE) for images with unit peak; +inf for identical images.
inline double psnr(const Tensor& reference, const Tensor& candidate) {
  if (reference.shape() != candidate.shape()) {
    throw ArgumentError("psnr: shape mismatch " + shape_to_string(reference.shape()) + " vs " +
                        shape_to_string(candidate.shape()));
  }
  double se = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - candidate[i];
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(reference.size()) / se);
}

/// Fraction of samples whose arg-max logit (lowest index on ties) equals the label.
inline double accuracy(const Tensor& logits, std::span<const std::size_t> labels) {
  logits.require_rank(2, "accuracy");
  if (labels.size() != logits.rows()) throw DimensionError("accuracy: label count differs from batch size");
  if (labels.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c)
      if (logits(i, c) > logits(i, best)) best = c;
    if (best == labels[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

/// Batched evaluation to bound memory on large sets.
inline Tensor predict(const nn::Model& model, const Tensor& inputs, std::size_t batch = 256) {
  const std::size_t n = inputs.dim(0);
  if (n <= batch) return nn::forward(model, inputs);
  std::vector<double> out;
  Shape out_shape;
  for (std::size_t lo = 0; lo < n; lo += batch) {
    const std::size_t hi = std::min(n, lo + batch);
    std::vector<std::size_t> idx(hi - lo);
    std::iota(idx.begin(), idx.end(), lo);
    const Tensor y = nn::forward(model, nn::Dataset::gather(inputs, idx));
    if (out_shape.empty()) out_shape = y.shape();
    out.insert(out.end(), y.data().begin(), y.data().end());
  }
  out_shape[0] = n;
  return Tensor(std::move(out_shape), std::move(out));
}

inline double accuracy(const nn::Model& model, const nn::Dataset& data) {
  return accuracy(predict(model, data.inputs), data.labels);
}

}  // namespace smoothcomp::analysis
