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

// Reference computations used by the tests. Nothing here calls into the
// library's kernels beyond the Tensor container itself.

#pragma once

#include <cmath>
#include <cstddef>
#include <algorithm>
#include <functional>
#include <vector>

#include "smoothcomp/rng.hpp"
#include "smoothcomp/tensor.hpp"

namespace oracle {

using smoothcomp::Tensor;

inline Tensor random_matrix(std::size_t m, std::size_t n, smoothcomp::Rng& rng, double scale = 1.0) {
  Tensor t({m, n});
  for (double& v : t.data()) v = scale * rng.uniform(-1.0, 1.0);
  return t;
}

inline Tensor random_tensor(smoothcomp::Shape shape, smoothcomp::Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = scale * rng.uniform(-1.0, 1.0);
  return t;
}

/// Triple loop, i-j-k order.
inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a(i, p) * b(p, j);
      c(i, j) = s;
    }
  return c;
}

inline double frob(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

/// Direct 2-D cross-correlation of one c x h x w image with an
/// o x c x kh x kw kernel, zero padding, plus optional bias.
inline Tensor direct_conv(const Tensor& x, const Tensor& w, const std::vector<double>& bias, std::size_t stride,
                          std::size_t pad) {
  const std::size_t c = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const std::size_t o = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1, ow = (wd + 2 * pad - kw) / stride + 1;
  Tensor y({o, oh, ow});
  for (std::size_t oc = 0; oc < o; ++oc)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double s = bias.empty() ? 0.0 : bias[oc];
        for (std::size_t ic = 0; ic < c; ++ic)
          for (std::size_t ky = 0; ky < kh; ++ky)
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
              const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd)) continue;
              s += w[((oc * c + ic) * kh + ky) * kw + kx] * x[(ic * h + iy) * wd + ix];
            }
        y[(oc * oh + oy) * ow + ox] = s;
      }
  return y;
}

/// Central differences of f at every entry of `param`, step h.
inline Tensor finite_difference(Tensor& param, const std::function<double()>& f, double h = 1e-5) {
  Tensor g(param.shape());
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double old = param[i];
    param[i] = old + h;
    const double fp = f();
    param[i] = old - h;
    const double fm = f();
    param[i] = old;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
inline double max_relative_error(const Tensor& a, const Tensor& b, double floor = 1e-5) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    const double s = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    m = std::max(m, d / s);
  }
  return m;
}

/// Eigenvalues of a symmetric matrix by cyclic two-sided Jacobi, sorted
/// descending. Independent route to singular values via aᵀa.
inline std::vector<double> symmetric_eigenvalues(Tensor a) {
  const std::size_t n = a.dim(0);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

}  // namespace oracle
