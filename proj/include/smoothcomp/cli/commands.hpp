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

// Command implementations behind the `smoothcomp` executable.
#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "smoothcomp/analysis.hpp"
#include "smoothcomp/compress.hpp"
#include "smoothcomp/io/data.hpp"
#include "smoothcomp/io/model_file.hpp"
#include "smoothcomp/io/run_config.hpp"
#include "smoothcomp/nn/presets.hpp"
#include "smoothcomp/nn/train.hpp"
#include "smoothcomp/pruning.hpp"

namespace smoothcomp::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDiverged = 3;

inline constexpr const char* kResultsEnv = "SMOOTHCOMP_RESULTS";

/// Root for outputs: $SMOOTHCOMP_RESULTS, else ./results. A relative
/// `configured` directory is placed under the root.
inline fs::path results_dir(const std::string& configured = {}) {
  if (!configured.empty() && fs::path(configured).is_absolute()) return configured;
  const char* env = std::getenv(kResultsEnv);
  const fs::path root = (env && *env) ? fs::path(env) : fs::path("results");
  return configured.empty() ? root : root / configured;
}

inline void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << text;
}

/// Tag used in file names for a numeric value: 6 significant digits.
inline std::string tag(double v) { return analysis::fmt6(v); }

// ---------------------------------------------------------------------------
// data per task
// ---------------------------------------------------------------------------

struct TaskData {
  std::string task;
  /// inr: full-resolution reference image
  Tensor image;
  nn::Dataset train;
  /// classify: held-out set (may be empty)
  nn::Dataset test;
};

inline std::uint64_t test_seed(std::uint64_t seed) { return seed ^ 0x5bd1e9955bd1e995ULL; }

inline TaskData load_task_data(const std::string& task, const io::DataSpec& d) {
  TaskData t;
  t.task = task;
  if (task == "inr") {
    if (d.source == "synth_gradient") t.image = io::synth_gradient(d.size);
    else if (d.source == "synth_blobs") t.image = io::synth_blobs(d.size, d.seed);
    else if (d.source == "image") t.image = io::ingest_image(d.path);
    else throw ConfigError("data.source", "'" + d.source + "' does not provide an image for task 'inr'");
    t.train = io::coordinate_dataset(t.image, d.stride);
    return t;
  }
  if (task != "classify") throw ConfigError("task", "unknown task '" + task + "'");
  if (d.source == "synth_rings") {
    t.train = io::synth_rings(d.count, d.size, d.seed, d.noise);
    if (d.test_count) t.test = io::synth_rings(d.test_count, d.size, test_seed(d.seed), d.noise);
  } else if (d.source == "idx") {
    t.train = io::ingest_idx(d.images, d.labels);
    if (!d.test_images.empty()) t.test = io::ingest_idx(d.test_images, d.test_labels);
  } else {
    throw ConfigError("data.source", "'" + d.source + "' does not provide labeled images for task 'classify'");
  }
  return t;
}

inline io::DataSpec data_spec_from_json(const ojson& j) {
  io::DataSpec d;
  d.source = j.value("source", std::string());
  d.size = j.value("size", std::size_t{0});
  d.count = j.value("count", d.count);
  d.test_count = j.value("test_count", d.test_count);
  d.noise = j.value("noise", d.noise);
  d.seed = j.value("seed", std::uint64_t{0});
  d.path = j.value("path", std::string());
  d.images = j.value("images", std::string());
  d.labels = j.value("labels", std::string());
  d.test_images = j.value("test_images", std::string());
  d.test_labels = j.value("test_labels", std::string());
  d.stride = j.value("stride", std::size_t{1});
  return d;
}

/// Full-resolution PSNR for inr (prediction clamped to [0, 1]); held-out
/// accuracy for classify (training accuracy when no held-out set exists).
inline double task_metric(const nn::Model& model, const TaskData& t) {
  if (t.task == "inr") {
    const std::size_t h = t.image.dim(1), w = t.image.dim(2);
    if (model.output_shape() != Shape{t.image.dim(0)})
      throw DimensionError("model outputs " + shape_to_string(model.output_shape()) + " but the image has " +
                           std::to_string(t.image.dim(0)) + " channels");
    const nn::Dataset full = io::coordinate_dataset(t.image, 1);
    return analysis::psnr(t.image, io::pixels_to_image(analysis::predict(model, full.inputs), h, w));
  }
  const nn::Dataset& d = t.test.size() ? t.test : t.train;
  return analysis::accuracy(model, d);
}

inline std::string metric_name(const std::string& task) { return task == "inr" ? "psnr" : "accuracy"; }

/// Task recorded in a model's provenance, else inferred from its input shape.
inline std::string model_task(const io::ModelFile& mf) {
  if (mf.provenance.contains("task")) return mf.provenance.at("task").get<std::string>();
  return mf.model.input_shape() == Shape{2} ? "inr" : "classify";
}

// ---------------------------------------------------------------------------
// compression sweep
// ---------------------------------------------------------------------------

inline compress::Compressed compress_with(const nn::Model& model, const std::string& method, double s, bool skip_when_larger) {
  if (method == "svd") {
    compress::CompressOptions opt;
    opt.skip_when_larger = skip_when_larger;
    return compress::compress_model(model, s, opt);
  }
  if (method == "svd_joint") {
    const auto layers = nn::inr_hidden_layers(model);
    if (layers.empty()) throw ArgumentError("svd_joint: model has no square hidden dense layers to stack");
    auto c = compress::compress_joint_stacked(model, layers, compress::rank_for_sparsity_joint(model, layers, s));
    c.report.target = s;
    return c;
  }
  if (method == "l1_structured") return compress::prune_structured_l1(model, s);
  if (method == "l1_unstructured") return compress::prune_unstructured_l1(model, s);
  throw ArgumentError("unknown compression method '" + method + "'");
}

inline std::string compression_csv_header() {
  return "method,target,achieved,params_before,params_after,ranks,metric_before,metric_after\n";
}

inline std::string compression_csv_row(const compress::CompressionReport& r) {
  std::ostringstream os;
  std::string ranks;
  for (const auto& l : r.plan.layers) {
    if (l.rank == 0) continue;
    ranks += (ranks.empty() ? "" : ";") + std::to_string(l.rank);
  }
  os << r.method << ',' << tag(r.target) << ',' << analysis::fmt6(r.plan.achieved_sparsity) << ','
     << r.plan.params_before << ',' << r.plan.params_after << ',' << ranks << ',' << analysis::fmt6(r.metric_before)
     << ',' << analysis::fmt6(r.metric_after) << '\n';
  return os.str();
}

/// Compress `model` by every method at every sparsity; writes one model per
/// (method, sparsity) and returns the report CSV text.
inline std::string run_sweep(const nn::Model& model, const ojson& provenance, const TaskData* data,
                             const std::vector<std::string>& methods, const std::vector<double>& sparsities,
                             bool skip_when_larger, const fs::path& out_dir, const std::string& stem,
                             std::ostream& log) {
  const double before = data ? task_metric(model, *data) : std::numeric_limits<double>::quiet_NaN();
  std::string csv = compression_csv_header();
  for (const auto& method : methods) {
    for (double s : sparsities) {
      auto c = compress_with(model, method, s, skip_when_larger);
      c.report.metric_before = before;
      if (data) c.report.metric_after = task_metric(c.model, *data);
      ojson prov = provenance;
      prov["compression"] = {{"method", method}, {"target", s}, {"achieved", c.report.plan.achieved_sparsity}};
      io::save_model(out_dir / (stem + "_" + method + "_s" + tag(s)), c.model, prov);
      csv += compression_csv_row(c.report);
      log << method << " s=" << tag(s) << " achieved=" << analysis::fmt6(c.report.plan.achieved_sparsity)
          << " metric=" << analysis::fmt6(c.report.metric_after) << " (" << analysis::fmt6(c.report.seconds) << " s)\n";
    }
  }
  return csv;
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

inline std::string metrics_csv_header() { return "epoch,lr,data_loss,reg_value,total_loss,metric\n"; }

inline std::string metrics_csv_row(const nn::EpochMetrics& m) {
  std::ostringstream os;
  os << m.epoch << ',' << analysis::fmt6(m.lr) << ',' << analysis::fmt6(m.data_loss) << ','
     << analysis::fmt6(m.reg_value) << ',' << analysis::fmt6(m.total_loss) << ',' << analysis::fmt6(m.metric) << '\n';
  return os.str();
}

inline nn::Model build_model(const io::RunConfig& c, const TaskData& t) {
  if (c.task == "inr") {
    nn::InrPreset p = c.inr;
    p.in_features = 2;
    p.out_features = t.image.dim(0);
    return nn::make_inr(p, c.seed);
  }
  const Tensor& x = t.train.inputs;
  if (x.rank() != 4) throw DimensionError("classify data must be n x c x h x w");
  nn::ClassifyPreset p = c.classify;
  p.channels = x.dim(1);
  p.height = x.dim(2);
  p.width = x.dim(3);
  p.classes = std::max<std::size_t>(2, t.train.classes);
  return nn::make_classifier(p, c.seed);
}

inline ojson provenance_of(const io::RunConfig& c, double lambda) {
  ojson p;
  p["task"] = c.task;
  p["regularizer"] = reg::to_string(c.train.regularizer);
  p["lambda"] = lambda;
  p["seed"] = c.seed;
  p["loss"] = nn::to_string(c.train.loss);
  p["optimizer"] = nn::to_string(c.train.optimizer.kind);
  p["lr"] = c.train.optimizer.lr;
  p["epochs"] = c.train.epochs;
  p["batch_size"] = c.train.batch_size;
  p["schedule"] = nn::to_string(c.train.schedule.kind);
  p["data"] = c.data.to_json();
  return p;
}

/// Train one model per lambda; optional compression sweep of each.
inline int cmd_train(const std::string& config_path, std::ostream& log) {
  const io::RunConfig c = io::load_run_config(config_path);
  const TaskData data = load_task_data(c.task, c.data);
  const fs::path out = results_dir(c.results);
  fs::create_directories(out);
  for (double lambda : c.lambdas) {
    const std::string suffix = c.lambdas.size() > 1 ? "_lambda" + tag(lambda) : "";
    nn::Model model = build_model(c, data);
    nn::TrainConfig tc = c.train;
    tc.lambda = lambda;
    std::string metrics = metrics_csv_header();
    log << "train " << c.task << " lambda=" << tag(lambda) << " params=" << model.parameter_count() << "\n";
    const long every = std::max<long>(1, tc.epochs / 10);
    nn::train(model, data.train, tc, [&](const nn::EpochMetrics& m) {
      metrics += metrics_csv_row(m);
      if (m.epoch % every == 0 || m.epoch + 1 == tc.epochs)
        log << "  epoch " << m.epoch << " loss=" << analysis::fmt6(m.total_loss) << " " << metric_name(c.task) << "="
            << analysis::fmt6(m.metric) << "\n";
    });
    write_text(out / ("metrics" + suffix + ".csv"), metrics);
    ojson prov = provenance_of(c, lambda);
    const double metric = task_metric(model, data);
    prov[metric_name(c.task)] = metric;
    const std::string stem = c.model_path + suffix;
    io::save_model(out / stem, model, prov);
    log << "  " << metric_name(c.task) << "=" << analysis::fmt6(metric) << " -> " << (out / stem).string() << ".json\n";
    if (c.compression) {
      const auto& cs = *c.compression;
      const std::string csv = run_sweep(model, prov, &data, cs.methods, cs.sparsities, cs.skip_when_larger, out,
                                        fs::path(stem).filename().string(), log);
      write_text(out / ("compression" + suffix + ".csv"), csv);
    }
  }
  return kExitOk;
}

inline std::vector<double> parse_sparsity_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ArgumentError("--sparsity: '" + item + "' is not a number");
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("--sparsity: " + item + " outside [0, 1]");
    out.push_back(v);
  }
  if (out.empty()) throw ArgumentError("--sparsity: empty list");
  return out;
}

inline int cmd_compress(const std::string& model_path, const std::vector<std::string>& methods,
                        const std::vector<double>& sparsities, bool skip_when_larger, const std::string& out_dir,
                        std::ostream& log) {
  for (const auto& m : methods)
    if (std::find(io::compression_methods().begin(), io::compression_methods().end(), m) == io::compression_methods().end())
      throw ArgumentError("unknown compression method '" + m + "'");
  const io::ModelFile mf = io::load_model(model_path);
  std::optional<TaskData> data;
  if (mf.provenance.contains("data")) {
    try {
      data = load_task_data(model_task(mf), data_spec_from_json(mf.provenance.at("data")));
    } catch (const Error& e) {
      log << "note: metric skipped, training data unavailable: " << e.what() << "\n";
    }
  }
  const fs::path out = results_dir(out_dir);
  const std::string stem = io::model_stem(model_path).filename().string();
  const std::string csv =
      run_sweep(mf.model, mf.provenance, data ? &*data : nullptr, methods, sparsities, skip_when_larger, out, stem, log);
  write_text(out / (stem + "_compression.csv"), csv);
  log << "report -> " << (out / (stem + "_compression.csv")).string() << "\n";
  return kExitOk;
}

inline int cmd_spectrum(const std::string& model_path, bool energy, const std::vector<std::size_t>& slice,
                        const std::string& out_dir, std::ostream& log) {
  const io::ModelFile mf = io::load_model(model_path);
  const fs::path out = results_dir(out_dir);
  const std::string stem = io::model_stem(model_path).filename().string();
  const auto rep = analysis::spectrum(mf.model, energy);
  write_text(out / (stem + "_spectrum.csv"), analysis::spectrum_csv(rep));
  log << "spectrum -> " << (out / (stem + "_spectrum.csv")).string() << "\n";
  if (!slice.empty()) {
    if (slice.size() != 2) throw ArgumentError("--slice expects LAYER,INPUT_CHANNEL");
    const auto s = analysis::export_weight_slice(mf.model, slice[0], slice[1]);
    const fs::path p = out / (stem + "_slice_layer" + std::to_string(slice[0]) + "_in" + std::to_string(slice[1]) + ".csv");
    write_text(p, analysis::weight_slice_csv(s));
    log << "slice -> " << p.string() << "\n";
  }
  return kExitOk;
}

/// `data_path` is a run config (its data section is used), a PNG/PGM image
/// (inr), or an IDX image file with `labels_path` (classify).
inline TaskData load_eval_data(const std::string& task, const std::string& data_path, const std::string& labels_path) {
  const std::string ext = fs::path(data_path).extension().string();
  if (ext == ".json") {
    const io::RunConfig c = io::load_run_config(data_path);
    if (c.task != task) throw ConfigError("task", "model was trained for '" + task + "' but the config is for '" + c.task + "'");
    return load_task_data(task, c.data);
  }
  TaskData t;
  t.task = task;
  if (task == "inr") {
    if (!labels_path.empty()) throw ArgumentError("--labels is only meaningful for classify models");
    t.image = io::ingest_image(data_path);
    t.train = io::coordinate_dataset(t.image, 1);
    return t;
  }
  if (labels_path.empty()) throw ArgumentError("classify evaluation needs --labels with an IDX image file");
  t.test = io::ingest_idx(data_path, labels_path);
  return t;
}

inline int cmd_evaluate(const std::string& model_path, const std::string& data_path, const std::string& labels_path,
                        const std::string& out_dir, std::ostream& out, std::ostream& log) {
  const io::ModelFile mf = io::load_model(model_path);
  const std::string task = model_task(mf);
  const TaskData data = load_eval_data(task, data_path, labels_path);
  if (task == "classify") {
    const nn::Dataset& set = data.test.size() ? data.test : data.train;
    const Shape sample(set.inputs.shape().begin() + 1, set.inputs.shape().end());
    if (sample != mf.model.input_shape())
      throw DimensionError("data samples are " + shape_to_string(sample) + " but the model expects " +
                           shape_to_string(mf.model.input_shape()));
  }
  const double metric = task_metric(mf.model, data);
  ojson j;
  j["model"] = model_path;
  j["task"] = task;
  if (std::isfinite(metric)) j[metric_name(task)] = metric;
  else j[metric_name(task)] = analysis::fmt6(metric);
  const std::string text = j.dump(2) + "\n";
  out << text;
  const fs::path dir = results_dir(out_dir);
  const std::string stem = io::model_stem(model_path).filename().string();
  write_text(dir / (stem + "_evaluate.json"), text);
  log << "evaluation -> " << (dir / (stem + "_evaluate.json")).string() << "\n";
  return kExitOk;
}

/// Map an exception to the documented exit codes and print it.
inline int report_error(const std::exception& e, std::ostream& err) {
  if (const auto* d = dynamic_cast<const DivergenceError*>(&e)) {
    err << "error: " << d->what() << " (last good epoch " << d->last_good_epoch() << ")\n";
    return kExitDiverged;
  }
  err << "error: " << e.what() << "\n";
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ArgumentError*>(&e) ||
      dynamic_cast<const DataError*>(&e) || dynamic_cast<const DimensionError*>(&e))
    return kExitUsage;
  return kExitFailure;
}

}  // namespace smoothcomp::cli
