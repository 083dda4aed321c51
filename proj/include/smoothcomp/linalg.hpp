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
#include <span>
#include <string>
#include <vector>

#include "smoothcomp/errors.hpp"
#include "smoothcomp/tensor.hpp"

namespace smoothcomp {

/// Compact SVD `a = u * diag(sigma) * vᵀ` of an m x n matrix, k = min(m, n).
///
/// `sigma` is sorted descending and non-negative; `u` (m x k) and `v` (n x k)
/// have orthonormal columns. Columns belonging to tied singular values come
/// in unspecified order.
struct SvdFactorization {
  Tensor u;
  std::vector<double> sigma;
  Tensor v;

  std::size_t rank_bound() const noexcept { return sigma.size(); }
  Tensor reconstruct() const { return matmul_nt(matmul(u, diag(sigma)), v); }
};

struct SvdOptions {
  double tolerance = 1e-12;
  int max_sweeps = 60;
  /// Singular values below `clamp * sigma[0]` are set to exactly zero.
  double clamp = 1e-12;
};

namespace detail {

inline double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

inline void rotate(double* x, double* y, std::size_t n, double c, double s) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i], yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

/// Fill `cols[j]` for every j in `missing` with unit vectors orthogonal to all
/// other columns (rows of `cols`, each of length `len`).
inline void complete_orthonormal(std::vector<double>& cols, std::size_t len, const std::vector<bool>& valid) {
  const std::size_t count = valid.size();
  std::vector<bool> have = valid;
  std::vector<double> cand(len);
  for (std::size_t j = 0; j < count; ++j) {
    if (have[j]) continue;
    double best_norm = -1.0;
    std::vector<double> best(len);
    for (std::size_t e = 0; e < len; ++e) {
      std::fill(cand.begin(), cand.end(), 0.0);
      cand[e] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t q = 0; q < count; ++q) {
          if (!have[q]) continue;
          const double* uq = cols.data() + q * len;
          const double d = dot(cand.data(), uq, len);
          for (std::size_t i = 0; i < len; ++i) cand[i] -= d * uq[i];
        }
      }
      const double nrm = std::sqrt(dot(cand.data(), cand.data(), len));
      if (nrm > best_norm) {
        best_norm = nrm;
        best = cand;
      }
    }
    double* uj = cols.data() + j * len;
    for (std::size_t i = 0; i < len; ++i) uj[i] = best[i] / best_norm;
    have[j] = true;
  }
}

/// One-sided Jacobi on a tall matrix (m >= n) given column-wise: `cols` holds
/// n columns of length m back to back.
inline SvdFactorization jacobi_tall(std::vector<double> cols, std::size_t m, std::size_t n, const SvdOptions& opt) {
  std::vector<double> vcols(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) vcols[j * n + j] = 1.0;

  std::vector<double> sq(n);
  int sweep = 0;
  bool rotated = true;
  while (rotated) {
    if (sweep == opt.max_sweeps) {
      throw ConvergenceError("svd: one-sided Jacobi did not converge after " + std::to_string(sweep) + " sweeps",
                             sweep);
    }
    rotated = false;
    ++sweep;
    // squared column norms, refreshed every sweep and updated exactly per rotation
    for (std::size_t j = 0; j < n; ++j) sq[j] = dot(cols.data() + j * m, cols.data() + j * m, m);
    for (std::size_t p = 0; p + 1 < n; ++p) {
      double* gp = cols.data() + p * m;
      for (std::size_t q = p + 1; q < n; ++q) {
        double* gq = cols.data() + q * m;
        const double alpha = sq[p];
        const double beta = sq[q];
        const double gamma = dot(gp, gq, m);
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= opt.tolerance * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(gp, gq, m, c, s);
        sq[p] = alpha - t * gamma;
        sq[q] = beta + t * gamma;
        rotate(vcols.data() + p * n, vcols.data() + q * n, n, c, s);
      }
    }
  }

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) norms[j] = std::sqrt(dot(cols.data() + j * m, cols.data() + j * m, m));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  const double top = n ? norms[order[0]] : 0.0;
  SvdFactorization f;
  f.sigma.resize(n);
  std::vector<double> ucols(n * m, 0.0);
  std::vector<bool> valid(n, false);
  Tensor v({n, n});
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    double s = norms[src];
    if (s < opt.clamp * top || s == 0.0) s = 0.0;
    f.sigma[j] = s;
    if (s > 0.0) {
      const double* g = cols.data() + src * m;
      for (std::size_t i = 0; i < m; ++i) ucols[j * m + i] = g[i] / s;
      valid[j] = true;
    }
    for (std::size_t i = 0; i < n; ++i) v(i, j) = vcols[src * n + i];
  }
  complete_orthonormal(ucols, m, valid);
  Tensor u({m, n});
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) u(i, j) = ucols[j * m + i];
  f.u = std::move(u);
  f.v = std::move(v);
  return f;
}

}  // namespace detail

/// Singular value decomposition by one-sided Jacobi rotations.
///
/// Runs on the taller orientation of `a` and swaps the factors back when
/// `a` is wide.
inline SvdFactorization svd(const Tensor& a, const SvdOptions& opt = {}) {
  a.require_rank(2, "svd");
  require_finite(a, "svd");
  const std::size_t m = a.rows(), n = a.cols();
  if (m >= n) {
    std::vector<double> cols(m * n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) cols[j * m + i] = a(i, j);
    return detail::jacobi_tall(std::move(cols), m, n, opt);
  }
  // columns of aᵀ are the rows of a
  std::vector<double> cols(a.data().begin(), a.data().end());
  SvdFactorization f = detail::jacobi_tall(std::move(cols), n, m, opt);
  std::swap(f.u, f.v);
  return f;
}

/// Singular values only.
inline std::vector<double> singular_values(const Tensor& a, const SvdOptions& opt = {}) {
  return svd(a, opt).sigma;
}

/// Rank-r factor pair with `expand * project` the best rank-r approximation.
struct LowRankPair {
  Tensor project;  ///< r x n, diag(sigma_r) * v_rᵀ
  Tensor expand;   ///< m x r, u_r
};

inline LowRankPair truncate(const SvdFactorization& f, std::size_t r) {
  const std::size_t k = f.rank_bound();
  if (r < 1 || r > k) {
    throw ArgumentError("truncate: rank " + std::to_string(r) + " outside [1, " + std::to_string(k) + "]");
  }
  const std::size_t m = f.u.rows(), n = f.v.rows();
  LowRankPair out{Tensor({r, n}), Tensor({m, r})};
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < n; ++j) out.project(i, j) = f.sigma[i] * f.v(j, i);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < r; ++j) out.expand(i, j) = f.u(i, j);
  return out;
}

/// sqrt of the discarded energy, i.e. the Frobenius error of the rank-r truncation.
inline double tail_energy(const std::vector<double>& sigma, std::size_t r) {
  double s = 0.0;
  for (std::size_t i = r; i < sigma.size(); ++i) s += sigma[i] * sigma[i];
  return std::sqrt(s);
}

/// Kernel geometry of a 2-D convolution.
struct ConvGeometry {
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t pad = 0;

  std::size_t out_h(std::size_t h) const { return out_extent(h, kernel_h, "height"); }
  std::size_t out_w(std::size_t w) const { return out_extent(w, kernel_w, "width"); }

 private:
  std::size_t out_extent(std::size_t in, std::size_t k, const char* what) const {
    if (stride < 1) throw ArgumentError("convolution stride must be >= 1");
    if (k < 1 || k > in + 2 * pad) {
      throw ArgumentError(std::string("convolution kernel ") + what + " " + std::to_string(k) +
                          " does not fit padded input " + std::to_string(in + 2 * pad));
    }
    return (in + 2 * pad - k) / stride + 1;
  }
};

/// Unfold a c x h x w image (given as a flat span) into (c*kh*kw) x (oh*ow)
/// columns written to `out`. Rows run channel-major, then kernel row, then
/// kernel column; columns run row-major over output positions.
inline void im2col(std::span<const double> image, std::size_t c, std::size_t h, std::size_t w,
                   const ConvGeometry& g, std::span<double> out) {
  const std::size_t oh = g.out_h(h), ow = g.out_w(w);
  const std::size_t npos = oh * ow;
  const auto pad = static_cast<long>(g.pad);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
        double* dst = out.data() + ((ch * g.kernel_h + ki) * g.kernel_w + kj) * npos;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const long y = static_cast<long>(oy * g.stride + ki) - pad;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const long x = static_cast<long>(ox * g.stride + kj) - pad;
            const bool inside = y >= 0 && y < static_cast<long>(h) && x >= 0 && x < static_cast<long>(w);
            dst[oy * ow + ox] = inside ? image[(ch * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(x)] : 0.0;
          }
        }
      }
    }
  }
}

inline Tensor im2col(const Tensor& input, const ConvGeometry& g) {
  input.require_rank(3, "im2col");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  Tensor out({c * g.kernel_h * g.kernel_w, g.out_h(h) * g.out_w(w)});
  im2col(input.data(), c, h, w, g, out.data());
  return out;
}

/// Adjoint of im2col: scatter-add columns back onto a c x h x w image.
inline void col2im(std::span<const double> columns, std::size_t c, std::size_t h, std::size_t w,
                   const ConvGeometry& g, std::span<double> image) {
  const std::size_t oh = g.out_h(h), ow = g.out_w(w);
  const std::size_t npos = oh * ow;
  const auto pad = static_cast<long>(g.pad);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
        const double* src = columns.data() + ((ch * g.kernel_h + ki) * g.kernel_w + kj) * npos;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const long y = static_cast<long>(oy * g.stride + ki) - pad;
          if (y < 0 || y >= static_cast<long>(h)) continue;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const long x = static_cast<long>(ox * g.stride + kj) - pad;
            if (x < 0 || x >= static_cast<long>(w)) continue;
            image[(ch * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(x)] += src[oy * ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace smoothcomp
