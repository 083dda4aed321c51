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

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "smoothcomp/errors.hpp"
#include "smoothcomp/nn/loss.hpp"
#include "smoothcomp/rng.hpp"
#include "smoothcomp/tensor.hpp"

namespace smoothcomp::io {

inline std::vector<unsigned char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'", 0);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Binary (P5) or ASCII (P2) PGM, scaled to [0, 1] by maxval. Result is 1 x h x w.
inline Tensor parse_pgm(const std::vector<unsigned char>& b) {
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < b.size()) {
      if (b[pos] == '#') {
        while (pos < b.size() && b[pos] != '\n') ++pos;
      } else if (std::isspace(b[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) {
    skip_ws();
    const std::size_t start = pos;
    std::uint64_t v = 0;
    while (pos < b.size() && std::isdigit(b[pos])) {
      v = v * 10 + (b[pos] - '0');
      if (v > 0xffffffffULL) throw DataError(std::string("pgm: ") + what + " too large", start);
      ++pos;
    }
    if (pos == start) throw DataError(std::string("pgm: expected ") + what, start);
    return static_cast<std::size_t>(v);
  };

  if (b.size() < 2 || b[0] != 'P' || (b[1] != '2' && b[1] != '5')) throw DataError("pgm: bad magic", 0);
  const bool binary = b[1] == '5';
  pos = 2;
  const std::size_t w = read_uint("width");
  const std::size_t h = read_uint("height");
  const std::size_t maxval = read_uint("maxval");
  if (w == 0 || h == 0) throw DataError("pgm: empty image", pos);
  if (maxval == 0 || maxval > 65535) throw DataError("pgm: maxval out of range", pos);
  Tensor img({1, h, w});
  if (binary) {
    if (pos >= b.size() || !std::isspace(b[pos])) throw DataError("pgm: expected whitespace after maxval", pos);
    ++pos;
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    if (b.size() - pos < w * h * bpp) throw DataError("pgm: truncated pixel data", b.size());
    for (std::size_t i = 0; i < w * h; ++i) {
      const std::size_t v = bpp == 1 ? b[pos + i] : (static_cast<std::size_t>(b[pos + 2 * i]) << 8) | b[pos + 2 * i + 1];
      if (v > maxval) throw DataError("pgm: sample exceeds maxval", pos + i * bpp);
      img[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
  } else {
    for (std::size_t i = 0; i < w * h; ++i) {
      const std::size_t at = pos;
      const std::size_t v = read_uint("sample");
      if (v > maxval) throw DataError("pgm: sample exceeds maxval", at);
      img[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
  }
  return img;
}

/// 8-bit PNG decoded to gray (1 x h x w) or RGB (3 x h x w) in [0, 1]; alpha is dropped.
inline Tensor parse_png(const std::vector<unsigned char>& b) {
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  for (std::size_t i = 0; i < 8; ++i) {
    if (i >= b.size() || b[i] != sig[i]) throw DataError("png: bad signature", i);
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, b.data(), b.size())) {
    throw DataError(std::string("png: ") + image.message, 8);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t c = color ? 3 : 1;
  std::vector<unsigned char> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DataError("png: " + msg, 8);
  }
  const std::size_t h = image.height, w = image.width;
  Tensor img({c, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < c; ++ch) img[(ch * h + y) * w + x] = pixels[(y * w + x) * c + ch] / 255.0;
  return img;
}

/// Reads a PNG or PGM file into a c x h x w tensor in [0, 1].
inline Tensor ingest_image(const std::string& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5')) return parse_pgm(bytes);
  return parse_png(bytes);
}

/// 8-bit PNG writer for c x h x w images with c in {1, 3}; values are clamped to [0, 1].
inline void write_png(const std::string& path, const Tensor& img) {
  img.require_rank(3, "write_png");
  const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
  if (c != 1 && c != 3) throw ArgumentError("write_png: need 1 or 3 channels");
  std::vector<unsigned char> pixels(c * h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double v = std::clamp(img[(ch * h + y) * w + x], 0.0, 1.0);
        pixels[(y * w + x) * c + ch] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    throw Error(std::string("write_png: ") + image.message);
  }
}

namespace detail {

inline std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t at) {
  if (at + 4 > b.size()) throw DataError("idx: truncated header", b.size());
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImages = 0x00000803;
inline constexpr std::uint32_t kIdxLabels = 0x00000801;

/// Unsigned-byte IDX image file (magic 0x00000803) -> n x 1 x h x w in [0, 1].
inline Tensor parse_idx_images(const std::vector<unsigned char>& b) {
  const std::uint32_t magic = detail::be32(b, 0);
  if (magic != kIdxImages) throw DataError("idx: expected image magic 0x00000803", 0);
  const std::size_t n = detail::be32(b, 4), h = detail::be32(b, 8), w = detail::be32(b, 12);
  if (n == 0 || h == 0 || w == 0) throw DataError("idx: zero dimension", 4);
  if (b.size() != 16 + n * h * w) throw DataError("idx: payload length does not match header", std::min(b.size(), 16 + n * h * w));
  Tensor t({n, 1, h, w});
  for (std::size_t i = 0; i < n * h * w; ++i) t[i] = b[16 + i] / 255.0;
  return t;
}

/// Unsigned-byte IDX label file (magic 0x00000801).
inline std::vector<std::size_t> parse_idx_labels(const std::vector<unsigned char>& b) {
  const std::uint32_t magic = detail::be32(b, 0);
  if (magic != kIdxLabels) throw DataError("idx: expected label magic 0x00000801", 0);
  const std::size_t n = detail::be32(b, 4);
  if (b.size() != 8 + n) throw DataError("idx: payload length does not match header", std::min(b.size(), 8 + n));
  return std::vector<std::size_t>(b.begin() + 8, b.end());
}

inline nn::Dataset ingest_idx(const std::string& images_path, const std::string& labels_path) {
  nn::Dataset d;
  d.inputs = parse_idx_images(read_bytes(images_path));
  d.labels = parse_idx_labels(read_bytes(labels_path));
  if (d.labels.size() != d.inputs.dim(0)) throw DataError("idx: image and label counts differ", 4);
  d.classes = *std::max_element(d.labels.begin(), d.labels.end()) + 1;
  return d;
}

inline std::vector<unsigned char> encode_idx_images(const Tensor& images) {
  images.require_rank(4, "encode_idx_images");
  const std::size_t n = images.dim(0), h = images.dim(2), w = images.dim(3);
  std::vector<unsigned char> b;
  auto put = [&](std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<unsigned char>(v >> s));
  };
  put(kIdxImages);
  put(static_cast<std::uint32_t>(n));
  put(static_cast<std::uint32_t>(h));
  put(static_cast<std::uint32_t>(w));
  for (std::size_t i = 0; i < n * h * w; ++i)
    b.push_back(static_cast<unsigned char>(std::lround(std::clamp(images[i], 0.0, 1.0) * 255.0)));
  return b;
}

inline std::vector<unsigned char> encode_idx_labels(const std::vector<std::size_t>& labels) {
  std::vector<unsigned char> b;
  const auto n = static_cast<std::uint32_t>(labels.size());
  for (std::uint32_t v : {kIdxLabels, n})
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<unsigned char>(v >> s));
  for (std::size_t l : labels) b.push_back(static_cast<unsigned char>(l));
  return b;
}

// ---------------------------------------------------------------------------
// synthetic data
// ---------------------------------------------------------------------------

/// 1 x size x size image with pixel (y, x) = (x + y) / (2 (size - 1)).
inline Tensor synth_gradient(std::size_t size) {
  if (size < 2) throw ArgumentError("synth_gradient: size must be >= 2");
  Tensor img({1, size, size});
  const double denom = 2.0 * static_cast<double>(size - 1);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) img[y * size + x] = static_cast<double>(x + y) / denom;
  return img;
}

/// 3 x size x size image: seeded sum of six Gaussian blobs with random
/// per-channel amplitudes, normalized to a peak of 1.
inline Tensor synth_blobs(std::size_t size, std::uint64_t seed) {
  if (size < 2) throw ArgumentError("synth_blobs: size must be >= 2");
  Rng rng(seed);
  Tensor img({3, size, size});
  const double s = static_cast<double>(size);
  for (int k = 0; k < 6; ++k) {
    const double cy = rng.uniform(0.15, 0.85) * s, cx = rng.uniform(0.15, 0.85) * s;
    const double sigma = rng.uniform(0.08, 0.2) * s;
    double amp[3];
    for (double& a : amp) a = rng.uniform(0.0, 1.0);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
        const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        for (std::size_t c = 0; c < 3; ++c) img[(c * size + y) * size + x] += amp[c] * g;
      }
  }
  double mx = 0.0;
  for (double v : img.data()) mx = std::max(mx, v);
  for (double& v : img.data()) v /= mx;
  return img;
}

/// Two-class image set: each 1 x size x size sample holds a noisy ring;
/// class 0 rings have radius ~0.2 size, class 1 rings ~0.33 size. Classes
/// alternate, so any prefix is balanced.
inline nn::Dataset synth_rings(std::size_t count, std::size_t size, std::uint64_t seed, double noise = 0.25) {
  if (size < 8) throw ArgumentError("synth_rings: size must be >= 8");
  Rng rng(seed);
  nn::Dataset d;
  d.classes = 2;
  d.inputs = Tensor({count, 1, size, size});
  d.labels.resize(count);
  const double s = static_cast<double>(size);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t label = i % 2;
    d.labels[i] = label;
    const double radius = (label == 0 ? rng.uniform(0.14, 0.26) : rng.uniform(0.27, 0.39)) * s;
    const double cy = s / 2.0 - 0.5 + rng.uniform(-0.1, 0.1) * s;
    const double cx = s / 2.0 - 0.5 + rng.uniform(-0.1, 0.1) * s;
    const double width = rng.uniform(0.6, 1.2);
    auto img = d.inputs.row(i);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double r = std::hypot(static_cast<double>(y) - cy, static_cast<double>(x) - cx);
        const double v = std::exp(-(r - radius) * (r - radius) / (2.0 * width * width));
        img[y * size + x] = std::clamp(v + noise * rng.normal(), 0.0, 1.0);
      }
  }
  return d;
}

// ---------------------------------------------------------------------------
// coordinate datasets for implicit representations
// ---------------------------------------------------------------------------

/// Pixel (y, x) of an h x w grid maps to ((2x/(w-1)) - 1, (2y/(h-1)) - 1).
inline double grid_coord(std::size_t i, std::size_t n) {
  return n > 1 ? 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0 : 0.0;
}

/// Coordinates -> pixel values for every `stride`-th pixel in both axes.
inline nn::Dataset coordinate_dataset(const Tensor& image, std::size_t stride = 1) {
  image.require_rank(3, "coordinate_dataset");
  if (stride < 1) throw ArgumentError("coordinate_dataset: stride must be >= 1");
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const std::size_t rows = (h + stride - 1) / stride, cols = (w + stride - 1) / stride;
  nn::Dataset d;
  d.inputs = Tensor({rows * cols, 2});
  d.targets = Tensor({rows * cols, c});
  std::size_t k = 0;
  for (std::size_t y = 0; y < h; y += stride)
    for (std::size_t x = 0; x < w; x += stride, ++k) {
      d.inputs(k, 0) = grid_coord(x, w);
      d.inputs(k, 1) = grid_coord(y, h);
      for (std::size_t ch = 0; ch < c; ++ch) d.targets(k, ch) = image[(ch * h + y) * w + x];
    }
  return d;
}

/// Reassemble per-pixel predictions (h*w x c, row-major pixels) into a
/// c x h x w image clamped to [0, 1].
inline Tensor pixels_to_image(const Tensor& pred, std::size_t h, std::size_t w) {
  pred.require_rank(2, "pixels_to_image");
  if (pred.rows() != h * w) throw DimensionError("pixels_to_image: pixel count mismatch");
  const std::size_t c = pred.cols();
  Tensor img({c, h, w});
  for (std::size_t p = 0; p < h * w; ++p)
    for (std::size_t ch = 0; ch < c; ++ch) img[ch * h * w + p] = std::clamp(pred(p, ch), 0.0, 1.0);
  return img;
}

}  // namespace smoothcomp::io
