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
#include <string>
#include <vector>

#include "smoothcomp/errors.hpp"
#include "smoothcomp/linalg.hpp"
#include "smoothcomp/nn/model.hpp"
#include "smoothcomp/tensor.hpp"

namespace smoothcomp::reg {

/// Smoothness penalties along the output dimension of every weight tensor.
///
///  - r1:  first differences of neighbouring output rows, l1 norm
///  - r2:  second differences of neighbouring output rows, l1 norm
///  - nuc: nuclear norm (sum of singular values)
///
/// Each layer term is normalized by its own (n_o - 1), (n_o - 2) or
/// min(rows, cols), then averaged over the N parameterized layers.
/// Biases are never regularized.
enum class RegularizerKind { none, r1, r2, nuc };

inline const char* to_string(RegularizerKind k) {
  switch (k) {
    case RegularizerKind::none: return "none";
    case RegularizerKind::r1: return "r1";
    case RegularizerKind::r2: return "r2";
    case RegularizerKind::nuc: return "nuc";
  }
  return "?";
}

inline RegularizerKind regularizer_from_string(const std::string& s) {
  if (s == "none") return RegularizerKind::none;
  if (s == "r1") return RegularizerKind::r1;
  if (s == "r2") return RegularizerKind::r2;
  if (s == "nuc") return RegularizerKind::nuc;
  throw ArgumentError("unknown regularizer '" + s + "'");
}

/// Rows are output channels; a conv kernel (o, c, kh, kw) becomes o x (c*kh*kw).
inline Tensor flatten_for_reg(const Tensor& w) {
  if (w.rank() == 2) return w;
  if (w.rank() == 4) return w.reshaped({w.dim(0), w.size() / w.dim(0)});
  throw ArgumentError("flatten_for_reg: expected a 2-D or 4-D weight, got " + shape_to_string(w.shape()));
}

inline Tensor unflatten_like(const Tensor& flat, const Tensor& like) { return flat.reshaped(like.shape()); }

/// Penalty value plus a gradient per parameter block (weight only; empty
/// tensors for blocks the penalty does not touch).
struct Penalty {
  double value = 0.0;
  std::vector<Tensor> weight_grads;
  std::vector<std::string> warnings;
};

namespace detail {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Sum of l1 norms of first differences of consecutive rows.
inline double first_difference(const Tensor& w, Tensor* grad, double scale) {
  const std::size_t rows = w.rows(), cols = w.cols();
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < rows; ++j) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = w(j, c) - w(j + 1, c);
      s += std::abs(d);
      if (grad) {
        const double g = scale * sign(d);
        (*grad)(j, c) += g;
        (*grad)(j + 1, c) -= g;
      }
    }
  }
  return s;
}

/// Sum of l1 norms of second differences of consecutive rows.
inline double second_difference(const Tensor& w, Tensor* grad, double scale) {
  const std::size_t rows = w.rows(), cols = w.cols();
  double s = 0.0;
  for (std::size_t j = 0; j + 2 < rows; ++j) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = w(j, c) - 2.0 * w(j + 1, c) + w(j + 2, c);
      s += std::abs(d);
      if (grad) {
        const double g = scale * sign(d);
        (*grad)(j, c) += g;
        (*grad)(j + 1, c) -= 2.0 * g;
        (*grad)(j + 2, c) += g;
      }
    }
  }
  return s;
}

}  // namespace detail

/// Evaluate penalty `kind` over all weights of `model`.
inline Penalty evaluate(RegularizerKind kind, const nn::Model& model, bool with_grad = true,
                        const SvdOptions& svd_opt = {}) {
  Penalty out;
  out.weight_grads.resize(model.params().size());
  if (kind == RegularizerKind::none) return out;

  const auto slots = model.used_slots();
  const double n_layers = static_cast<double>(slots.size());
  for (std::size_t slot : slots) {
    const Tensor& w = model.params()[slot].weight;
    const Tensor flat = flatten_for_reg(w);
    const std::size_t n_o = flat.rows();
    Tensor grad;
    if (with_grad) grad = Tensor(flat.shape());
    switch (kind) {
      case RegularizerKind::r1: {
        if (n_o < 2) {
          out.warnings.push_back("r1: block " + std::to_string(slot) + " has fewer than 2 output rows; skipped");
          break;
        }
        const double norm = 1.0 / (n_layers * static_cast<double>(n_o - 1));
        out.value += norm * detail::first_difference(flat, with_grad ? &grad : nullptr, norm);
        break;
      }
      case RegularizerKind::r2: {
        if (n_o < 3) {
          out.warnings.push_back("r2: block " + std::to_string(slot) + " has fewer than 3 output rows; skipped");
          break;
        }
        const double norm = 1.0 / (n_layers * static_cast<double>(n_o - 2));
        out.value += norm * detail::second_difference(flat, with_grad ? &grad : nullptr, norm);
        break;
      }
      case RegularizerKind::nuc: {
        const SvdFactorization f = svd(flat, svd_opt);
        const double norm = 1.0 / (n_layers * static_cast<double>(f.rank_bound()));
        double s = 0.0;
        for (double v : f.sigma) s += v;
        out.value += norm * s;
        if (with_grad) {
          grad = matmul_nt(f.u, f.v);
          grad *= norm;
        }
        break;
      }
      case RegularizerKind::none: break;
    }
    if (with_grad) out.weight_grads[slot] = unflatten_like(grad, w);
  }
  return out;
}

inline double r1_penalty(const nn::Model& m) { return evaluate(RegularizerKind::r1, m, false).value; }
inline double r2_penalty(const nn::Model& m) { return evaluate(RegularizerKind::r2, m, false).value; }
inline double nuc_penalty(const nn::Model& m) { return evaluate(RegularizerKind::nuc, m, false).value; }

}  // namespace smoothcomp::reg
