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

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "smoothcomp/errors.hpp"
#include "smoothcomp/io/data.hpp"
#include "smoothcomp/nn/model.hpp"

namespace smoothcomp::io {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

using ordered_json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// A model on disk is a JSON manifest `<stem>.json` plus a sidecar
/// `<stem>.bin` of little-endian float32 parameters: parameter blocks in
/// manifest order, weight then bias per block.
struct ModelFile {
  nn::Model model;
  /// Free-form training provenance (task, regularizer, lambda, seed, data, ...).
  ordered_json provenance = ordered_json::object();
};

/// `path` may name the manifest, the sidecar, or the bare stem.
inline std::filesystem::path model_stem(const std::filesystem::path& path) {
  auto p = path;
  if (p.extension() == ".json" || p.extension() == ".bin") p.replace_extension();
  return p;
}

inline ordered_json layer_to_json(const nn::LayerSpec& l) {
  ordered_json j;
  j["kind"] = nn::to_string(l.kind);
  switch (l.kind) {
    case nn::LayerKind::dense:
    case nn::LayerKind::conv2d:
      j["in"] = l.in;
      j["out"] = l.out;
      if (l.kind == nn::LayerKind::conv2d) {
        j["kernel"] = {l.geometry.kernel_h, l.geometry.kernel_w};
        j["stride"] = l.geometry.stride;
        j["pad"] = l.geometry.pad;
      }
      j["has_bias"] = l.has_bias;
      j["block"] = l.slot;
      j["factorized"] = l.factorized;
      break;
    case nn::LayerKind::activation:
      j["activation"] = nn::to_string(l.activation);
      if (l.activation == nn::Activation::sine) j["omega0"] = l.omega0;
      break;
    case nn::LayerKind::flatten: break;
  }
  return j;
}

inline nn::LayerSpec layer_from_json(const ordered_json& j) {
  const std::string kind = j.at("kind");
  nn::LayerSpec l;
  if (kind == "dense") {
    l = nn::LayerSpec::dense(j.at("in"), j.at("out"), j.at("has_bias"));
  } else if (kind == "conv2d") {
    l = nn::LayerSpec::conv2d(j.at("in"), j.at("out"), j.at("kernel").at(0), j.at("kernel").at(1), j.at("stride"),
                              j.at("pad"), j.at("has_bias"));
  } else if (kind == "activation") {
    const std::string a = j.at("activation");
    nn::Activation act;
    if (a == "identity") act = nn::Activation::identity;
    else if (a == "relu") act = nn::Activation::relu;
    else if (a == "sine") act = nn::Activation::sine;
    else throw ArgumentError("model manifest: unknown activation '" + a + "'");
    l = nn::LayerSpec::act(act, j.value("omega0", 30.0));
  } else if (kind == "flatten") {
    l = nn::LayerSpec::flatten();
  } else {
    throw ArgumentError("model manifest: unknown layer kind '" + kind + "'");
  }
  if (l.parameterized()) {
    l.slot = j.at("block");
    l.factorized = j.value("factorized", false);
  }
  return l;
}

inline void save_model(const std::filesystem::path& path, const nn::Model& model,
                       const ordered_json& provenance = ordered_json::object()) {
  model.validate();
  const auto stem = model_stem(path);
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  const auto bin_path = std::filesystem::path(stem.string() + ".bin");

  ordered_json m;
  m["format_version"] = kFormatVersion;
  m["input_shape"] = model.input_shape();
  ordered_json layers = ordered_json::array();
  for (const auto& l : model.layers()) layers.push_back(layer_to_json(l));
  m["layers"] = layers;
  ordered_json blocks = ordered_json::array();
  std::size_t count = 0;
  for (const auto& b : model.params()) {
    ordered_json jb;
    jb["weight_shape"] = b.weight.shape();
    jb["bias"] = b.bias.size();
    blocks.push_back(jb);
    count += b.count();
  }
  m["blocks"] = blocks;
  m["parameter_count"] = count;
  m["weights"] = bin_path.filename().string();
  m["provenance"] = provenance;

  std::vector<float> flat;
  flat.reserve(count);
  for (const auto& b : model.params()) {
    for (double v : b.weight.data()) flat.push_back(static_cast<float>(v));
    for (double v : b.bias.data()) flat.push_back(static_cast<float>(v));
  }
  {
    std::ofstream out(bin_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + bin_path.string() + "'");
    out.write(reinterpret_cast<const char*>(flat.data()), static_cast<std::streamsize>(flat.size() * sizeof(float)));
  }
  std::ofstream out(stem.string() + ".json", std::ios::trunc);
  if (!out) throw Error("cannot write '" + stem.string() + ".json'");
  out << m.dump(2) << '\n';
}

inline ModelFile load_model(const std::filesystem::path& path) {
  const auto stem = model_stem(path);
  const std::string manifest_path = stem.string() + ".json";
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open model manifest '" + manifest_path + "'", 0);
  ordered_json m;
  try {
    m = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("model manifest: ") + e.what(), e.byte);
  }
  ModelFile mf;
  try {
    if (m.at("format_version").get<int>() != kFormatVersion) throw ArgumentError("model manifest: unsupported format_version");
    nn::Model model(m.at("input_shape").get<Shape>());
    const auto& jblocks = m.at("blocks");
    std::vector<nn::ParamBlock> blocks;
    std::size_t count = 0;
    for (const auto& jb : jblocks) {
      nn::ParamBlock b;
      b.weight = Tensor(jb.at("weight_shape").get<Shape>());
      const std::size_t nb = jb.at("bias").get<std::size_t>();
      if (nb) b.bias = Tensor({nb});
      count += b.count();
      blocks.push_back(std::move(b));
    }
    if (count != m.at("parameter_count").get<std::size_t>())
      throw ArgumentError("model manifest: parameter_count disagrees with blocks");

    const auto bin_path = stem.parent_path() / m.at("weights").get<std::string>();
    const auto bytes = read_bytes(bin_path.string());
    if (bytes.size() != count * sizeof(float)) {
      throw DataError("model weights: expected " + std::to_string(count * sizeof(float)) + " bytes, found " +
                          std::to_string(bytes.size()),
                      std::min(bytes.size(), count * sizeof(float)));
    }
    std::size_t off = 0;
    auto fill = [&](Tensor& t) {
      for (double& v : t.data()) {
        float f;
        std::memcpy(&f, bytes.data() + off, sizeof f);
        off += sizeof f;
        v = f;
      }
    };
    for (auto& b : blocks) {
      fill(b.weight);
      fill(b.bias);
    }
    model.params() = std::move(blocks);
    for (const auto& jl : m.at("layers")) {
      nn::LayerSpec l = layer_from_json(jl);
      if (!l.parameterized()) {
        model.add(l);
        continue;
      }
      if (l.slot >= model.params().size()) throw ArgumentError("model manifest: layer refers to missing block");
      model.add_shared(l, l.slot);
    }
    model.validate();
    mf.model = std::move(model);
    mf.provenance = m.value("provenance", ordered_json::object());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model manifest: ") + e.what(), 0);
  }
  return mf;
}

}  // namespace smoothcomp::io
