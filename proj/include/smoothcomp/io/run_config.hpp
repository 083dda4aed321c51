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

// JSON run configuration for the command-line driver.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "smoothcomp/errors.hpp"
#include "smoothcomp/nn/presets.hpp"
#include "smoothcomp/nn/train.hpp"

namespace smoothcomp::io {

struct DataSpec {
  /// synth_gradient | synth_blobs | image (inr); synth_rings | idx (classify)
  std::string source;
  std::size_t size = 0;
  std::size_t count = 400;
  std::size_t test_count = 200;
  double noise = 0.25;
  std::uint64_t seed = 0;
  std::string path;
  std::string images;
  std::string labels;
  std::string test_images;
  std::string test_labels;
  /// Coordinate subsampling of the INR training set.
  std::size_t stride = 1;

  nlohmann::ordered_json to_json() const;
};

struct CompressionSpec {
  std::vector<std::string> methods;
  std::vector<double> sparsities;
  bool skip_when_larger = false;
};

struct RunConfig {
  std::string task;
  std::uint64_t seed = 0;
  nn::InrPreset inr;
  nn::ClassifyPreset classify;
  DataSpec data;
  nn::TrainConfig train;
  /// Every entry trains one model; a scalar config gives a single entry.
  std::vector<double> lambdas{0.0};
  std::optional<CompressionSpec> compression;
  std::string model_path = "model";
  std::string results;
};

inline const std::vector<std::string>& compression_methods() {
  static const std::vector<std::string> m{"svd", "svd_joint", "l1_structured", "l1_unstructured"};
  return m;
}

inline nlohmann::ordered_json DataSpec::to_json() const {
  nlohmann::ordered_json j;
  j["source"] = source;
  if (source == "image") {
    j["path"] = path;
  } else if (source == "idx") {
    j["images"] = images;
    j["labels"] = labels;
    if (!test_images.empty()) {
      j["test_images"] = test_images;
      j["test_labels"] = test_labels;
    }
  } else {
    j["size"] = size;
    j["seed"] = seed;
    if (source == "synth_rings") {
      j["count"] = count;
      j["test_count"] = test_count;
      j["noise"] = noise;
    }
  }
  if (source != "synth_rings" && source != "idx") j["stride"] = stride;
  return j;
}

namespace detail {

using ojson = nlohmann::ordered_json;

/// Best-effort "line:col" of a JSON field path: each component is searched as
/// a quoted key after the position of its parent.
inline std::string locate(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& key : path) {
    if (!key.empty() && key[0] == '[') continue;
    const auto at = text.find('"' + key + '"', pos);
    if (at == std::string::npos) return {};
    pos = at;
  }
  if (path.empty()) return {};
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < pos && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

class Reader {
 public:
  Reader(const std::string& text, std::string origin) : text_(text), origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
    std::string field;
    for (const auto& p : path) {
      if (!p.empty() && p[0] == '[') field += p;
      else field += (field.empty() ? "" : ".") + p;
    }
    const std::string where = locate(text_, path);
    throw ConfigError(field, msg + " (" + origin_ + (where.empty() ? "" : ":" + where) + ")");
  }

  void only(const ojson& obj, const std::vector<std::string>& path, const std::set<std::string>& allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : obj.items()) {
      (void)v;
      if (!allowed.count(k)) {
        auto p = path;
        p.push_back(k);
        fail(p, "unknown key");
      }
    }
  }

  const ojson* get(const ojson& obj, const std::string& key) const {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  double number(const ojson& v, const std::vector<std::string>& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }

  std::size_t count(const ojson& v, const std::vector<std::string>& path, std::size_t min = 0) const {
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(path, "expected a non-negative integer");
    const auto n = v.get<std::size_t>();
    if (n < min) fail(path, "must be >= " + std::to_string(min));
    return n;
  }

  std::string string(const ojson& v, const std::vector<std::string>& path, const std::vector<std::string>& choices = {}) const {
    if (!v.is_string()) fail(path, "expected a string");
    const std::string s = v.get<std::string>();
    if (!choices.empty() && std::find(choices.begin(), choices.end(), s) == choices.end()) {
      std::string list;
      for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
      fail(path, "'" + s + "' is not one of {" + list + "}");
    }
    return s;
  }

  bool boolean(const ojson& v, const std::vector<std::string>& path) const {
    if (!v.is_boolean()) fail(path, "expected true or false");
    return v.get<bool>();
  }

 private:
  const std::string& text_;
  std::string origin_;
};

inline std::vector<std::string> sub(std::vector<std::string> p, const std::string& k) {
  p.push_back(k);
  return p;
}

}  // namespace detail

/// Parse and validate a run configuration. Every problem becomes a
/// ConfigError naming the field and, where possible, its line and column.
inline RunConfig parse_run_config(const std::string& text, const std::string& origin = "config") {
  using detail::ojson;
  using detail::sub;
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("", "invalid JSON at " + origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                              e.what());
  }
  const detail::Reader r(text, origin);
  RunConfig c;
  r.only(j, {}, {"task", "seed", "model", "data", "train", "compression", "paths"});

  const ojson* task = r.get(j, "task");
  if (!task) r.fail({"task"}, "required");
  c.task = r.string(*task, {"task"}, {"inr", "classify"});
  const bool inr = c.task == "inr";
  if (const ojson* v = r.get(j, "seed")) c.seed = r.count(*v, {"seed"});

  // model
  if (const ojson* m = r.get(j, "model")) {
    const std::vector<std::string> p{"model"};
    if (inr) {
      r.only(*m, p, {"width", "hidden_layers", "omega0", "first_omega0"});
      if (const ojson* v = r.get(*m, "width")) c.inr.width = r.count(*v, sub(p, "width"), 1);
      if (const ojson* v = r.get(*m, "hidden_layers")) c.inr.hidden_layers = r.count(*v, sub(p, "hidden_layers"));
      if (const ojson* v = r.get(*m, "omega0")) c.inr.omega0 = r.number(*v, sub(p, "omega0"));
      if (const ojson* v = r.get(*m, "first_omega0")) c.inr.first_omega0 = r.number(*v, sub(p, "first_omega0"));
      if (!(c.inr.omega0 > 0) || !(c.inr.first_omega0 > 0)) r.fail(sub(p, "omega0"), "must be > 0");
    } else {
      r.only(*m, p, {"conv_widths"});
      if (const ojson* v = r.get(*m, "conv_widths")) {
        if (!v->is_array() || v->empty()) r.fail(sub(p, "conv_widths"), "expected a non-empty array");
        c.classify.conv_widths.clear();
        for (std::size_t i = 0; i < v->size(); ++i)
          c.classify.conv_widths.push_back(r.count((*v)[i], sub(sub(p, "conv_widths"), "[" + std::to_string(i) + "]"), 1));
      }
    }
  }

  // data
  {
    const ojson* d = r.get(j, "data");
    if (!d) r.fail({"data"}, "required");
    const std::vector<std::string> p{"data"};
    if (!d->is_object()) r.fail(p, "expected an object");
    const ojson* src = r.get(*d, "source");
    if (!src) r.fail(sub(p, "source"), "required");
    const std::vector<std::string> sources = inr ? std::vector<std::string>{"synth_gradient", "synth_blobs", "image"}
                                                 : std::vector<std::string>{"synth_rings", "idx"};
    c.data.source = r.string(*src, sub(p, "source"), sources);
    c.data.seed = c.seed;
    const std::string& s = c.data.source;
    if (s == "image") {
      r.only(*d, p, {"source", "path", "stride"});
    } else if (s == "idx") {
      r.only(*d, p, {"source", "images", "labels", "test_images", "test_labels"});
    } else if (s == "synth_rings") {
      r.only(*d, p, {"source", "size", "count", "test_count", "noise", "seed"});
    } else {
      r.only(*d, p, {"source", "size", "seed", "stride"});
    }
    c.data.size = inr ? 64 : 12;
    if (const ojson* v = r.get(*d, "size")) c.data.size = r.count(*v, sub(p, "size"), inr ? 2 : 8);
    if (const ojson* v = r.get(*d, "count")) c.data.count = r.count(*v, sub(p, "count"), 1);
    if (const ojson* v = r.get(*d, "test_count")) c.data.test_count = r.count(*v, sub(p, "test_count"));
    if (const ojson* v = r.get(*d, "noise")) {
      c.data.noise = r.number(*v, sub(p, "noise"));
      if (c.data.noise < 0) r.fail(sub(p, "noise"), "must be >= 0");
    }
    if (const ojson* v = r.get(*d, "seed")) c.data.seed = r.count(*v, sub(p, "seed"));
    if (const ojson* v = r.get(*d, "stride")) c.data.stride = r.count(*v, sub(p, "stride"), 1);
    for (const char* k : {"path", "images", "labels", "test_images", "test_labels"}) {
      if (const ojson* v = r.get(*d, k)) {
        std::string& dst = std::string(k) == "path"     ? c.data.path
                           : std::string(k) == "images" ? c.data.images
                           : std::string(k) == "labels" ? c.data.labels
                           : std::string(k) == "test_images" ? c.data.test_images
                                                             : c.data.test_labels;
        dst = r.string(*v, sub(p, k));
      }
    }
    if (s == "image" && c.data.path.empty()) r.fail(sub(p, "path"), "required for source 'image'");
    if (s == "idx" && (c.data.images.empty() || c.data.labels.empty()))
      r.fail(sub(p, c.data.images.empty() ? "images" : "labels"), "required for source 'idx'");
    if (c.data.test_images.empty() != c.data.test_labels.empty())
      r.fail(sub(p, "test_labels"), "test_images and test_labels go together");
  }

  // train
  c.train.loss = inr ? nn::LossKind::mse : nn::LossKind::cross_entropy;
  c.train.seed = c.seed;
  if (const ojson* t = r.get(j, "train")) {
    const std::vector<std::string> p{"train"};
    r.only(*t, p, {"loss", "regularizer", "lambda", "optimizer", "epochs", "batch_size", "schedule", "augment_pad"});
    if (const ojson* v = r.get(*t, "loss")) {
      c.train.loss = nn::loss_from_string(r.string(*v, sub(p, "loss"), {"mse", "cross_entropy"}));
      if ((c.train.loss == nn::LossKind::mse) != inr)
        r.fail(sub(p, "loss"), inr ? "task 'inr' requires mse" : "task 'classify' requires cross_entropy");
    }
    if (const ojson* v = r.get(*t, "regularizer"))
      c.train.regularizer = reg::regularizer_from_string(r.string(*v, sub(p, "regularizer"), {"none", "r1", "r2", "nuc"}));
    if (const ojson* v = r.get(*t, "lambda")) {
      c.lambdas.clear();
      auto one = [&](const ojson& x, const std::vector<std::string>& at) {
        const double l = r.number(x, at);
        if (!(l >= 0.0) || !std::isfinite(l)) r.fail(at, "lambda must be finite and >= 0");
        c.lambdas.push_back(l);
      };
      if (v->is_array()) {
        if (v->empty()) r.fail(sub(p, "lambda"), "empty lambda list");
        for (std::size_t i = 0; i < v->size(); ++i) one((*v)[i], sub(sub(p, "lambda"), "[" + std::to_string(i) + "]"));
      } else {
        one(*v, sub(p, "lambda"));
      }
    }
    if (const ojson* o = r.get(*t, "optimizer")) {
      const auto op = sub(p, "optimizer");
      r.only(*o, op, {"kind", "lr", "momentum", "nesterov", "beta1", "beta2", "eps", "weight_decay"});
      auto& s = c.train.optimizer;
      if (const ojson* v = r.get(*o, "kind")) s.kind = nn::optimizer_from_string(r.string(*v, sub(op, "kind"), {"sgd", "adam"}));
      if (const ojson* v = r.get(*o, "lr")) s.lr = r.number(*v, sub(op, "lr"));
      if (const ojson* v = r.get(*o, "momentum")) s.momentum = r.number(*v, sub(op, "momentum"));
      if (const ojson* v = r.get(*o, "nesterov")) s.nesterov = r.boolean(*v, sub(op, "nesterov"));
      if (const ojson* v = r.get(*o, "beta1")) s.beta1 = r.number(*v, sub(op, "beta1"));
      if (const ojson* v = r.get(*o, "beta2")) s.beta2 = r.number(*v, sub(op, "beta2"));
      if (const ojson* v = r.get(*o, "eps")) s.eps = r.number(*v, sub(op, "eps"));
      if (const ojson* v = r.get(*o, "weight_decay")) s.weight_decay = r.number(*v, sub(op, "weight_decay"));
      if (!(s.lr > 0.0)) r.fail(sub(op, "lr"), "must be > 0");
      if (s.momentum < 0.0 || s.momentum >= 1.0) r.fail(sub(op, "momentum"), "must lie in [0, 1)");
      if (s.beta1 < 0.0 || s.beta1 >= 1.0) r.fail(sub(op, "beta1"), "must lie in [0, 1)");
      if (s.beta2 < 0.0 || s.beta2 >= 1.0) r.fail(sub(op, "beta2"), "must lie in [0, 1)");
      if (!(s.eps > 0.0)) r.fail(sub(op, "eps"), "must be > 0");
      if (s.weight_decay < 0.0) r.fail(sub(op, "weight_decay"), "must be >= 0");
    }
    if (const ojson* v = r.get(*t, "epochs")) c.train.epochs = static_cast<long>(r.count(*v, sub(p, "epochs"), 1));
    if (const ojson* v = r.get(*t, "batch_size")) c.train.batch_size = r.count(*v, sub(p, "batch_size"));
    if (const ojson* v = r.get(*t, "augment_pad")) {
      c.train.augment_pad = r.count(*v, sub(p, "augment_pad"));
      if (inr && c.train.augment_pad) r.fail(sub(p, "augment_pad"), "only available for task 'classify'");
    }
    if (const ojson* s = r.get(*t, "schedule")) {
      const auto sp = sub(p, "schedule");
      r.only(*s, sp, {"kind", "total_steps", "warmup_steps", "min_factor"});
      auto& sc = c.train.schedule;
      if (const ojson* v = r.get(*s, "kind"))
        sc.kind = nn::schedule_from_string(r.string(*v, sub(sp, "kind"), {"constant", "cosine", "warmup_cosine"}));
      if (const ojson* v = r.get(*s, "total_steps")) sc.total_steps = r.count(*v, sub(sp, "total_steps"));
      if (const ojson* v = r.get(*s, "warmup_steps")) sc.warmup_steps = r.count(*v, sub(sp, "warmup_steps"));
      if (const ojson* v = r.get(*s, "min_factor")) {
        sc.min_factor = r.number(*v, sub(sp, "min_factor"));
        if (sc.min_factor < 0.0 || sc.min_factor > 1.0) r.fail(sub(sp, "min_factor"), "must lie in [0, 1]");
      }
    }
  }
  if (c.train.regularizer == reg::RegularizerKind::none) {
    for (double l : c.lambdas)
      if (l != 0.0) r.fail({"train", "lambda"}, "non-zero lambda needs a regularizer");
  }

  // compression
  if (const ojson* cm = r.get(j, "compression")) {
    const std::vector<std::string> p{"compression"};
    r.only(*cm, p, {"method", "sparsities", "skip_when_larger"});
    CompressionSpec cs;
    const ojson* m = r.get(*cm, "method");
    if (!m) r.fail(sub(p, "method"), "required");
    if (m->is_array()) {
      for (std::size_t i = 0; i < m->size(); ++i)
        cs.methods.push_back(r.string((*m)[i], sub(sub(p, "method"), "[" + std::to_string(i) + "]"), compression_methods()));
    } else {
      cs.methods.push_back(r.string(*m, sub(p, "method"), compression_methods()));
    }
    if (cs.methods.empty()) r.fail(sub(p, "method"), "empty method list");
    const ojson* sv = r.get(*cm, "sparsities");
    if (!sv) r.fail(sub(p, "sparsities"), "required");
    if (!sv->is_array() || sv->empty()) r.fail(sub(p, "sparsities"), "expected a non-empty array");
    for (std::size_t i = 0; i < sv->size(); ++i) {
      const auto at = sub(sub(p, "sparsities"), "[" + std::to_string(i) + "]");
      const double s = r.number((*sv)[i], at);
      if (!(s >= 0.0 && s <= 1.0)) r.fail(at, "sparsity must lie in [0, 1]");
      cs.sparsities.push_back(s);
    }
    if (const ojson* v = r.get(*cm, "skip_when_larger")) cs.skip_when_larger = r.boolean(*v, sub(p, "skip_when_larger"));
    c.compression = std::move(cs);
  }

  // paths
  if (const ojson* ps = r.get(j, "paths")) {
    const std::vector<std::string> p{"paths"};
    r.only(*ps, p, {"model", "results"});
    if (const ojson* v = r.get(*ps, "model")) c.model_path = r.string(*v, sub(p, "model"));
    if (const ojson* v = r.get(*ps, "results")) c.results = r.string(*v, sub(p, "results"));
    if (c.model_path.empty()) r.fail(sub(p, "model"), "must not be empty");
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

}  // namespace smoothcomp::io
