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

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smoothcomp/cli/commands.hpp"

namespace cli = smoothcomp::cli;

namespace {

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train smoothness-regularized networks and compress them without fine-tuning."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "smoothcomp 1.0.0");

  std::string config;
  auto* train = app.add_subcommand("train", "Train per a JSON run config; optionally sweep compression.");
  train->add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);

  std::string model, method = "svd", sparsity, out;
  bool skip = false;
  auto* comp = app.add_subcommand("compress", "Compress a saved model at one or more target sparsities.");
  comp->add_option("--model", model, "Model manifest (.json) or stem")->required();
  comp->add_option("--method", method, "svd, svd_joint, l1_structured, l1_unstructured (comma-separated)");
  comp->add_option("--sparsity", sparsity, "Comma-separated targets in [0, 1]")->required();
  comp->add_flag("--skip-when-larger", skip, "Keep layers whose factorization would add parameters");
  comp->add_option("--out", out, "Output directory (default: results root)");

  bool energy = false;
  std::vector<std::size_t> slice;
  auto* spec = app.add_subcommand("spectrum", "Singular-value spectra of every weight.");
  spec->add_option("--model", model, "Model manifest (.json) or stem")->required();
  spec->add_flag("--energy", energy, "Cumulative curves over squared singular values");
  spec->add_option("--slice", slice, "Also export kernels of LAYER,INPUT_CHANNEL")->delimiter(',')->expected(2);
  spec->add_option("--out", out, "Output directory (default: results root)");

  std::string data, labels;
  auto* eval = app.add_subcommand("evaluate", "PSNR (inr) or accuracy (classify) of a saved model.");
  eval->add_option("--model", model, "Model manifest (.json) or stem")->required();
  eval->add_option("--data", data, "Image, IDX image file, or run config")->required();
  eval->add_option("--labels", labels, "IDX label file (classify)");
  eval->add_option("--out", out, "Output directory (default: results root)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    if (*train) return cli::cmd_train(config, std::cerr);
    if (*comp) return cli::cmd_compress(model, split(method), cli::parse_sparsity_list(sparsity), skip, out, std::cerr);
    if (*spec) return cli::cmd_spectrum(model, energy, slice, out, std::cerr);
    if (*eval) return cli::cmd_evaluate(model, data, labels, out, std::cout, std::cerr);
  } catch (const std::exception& e) {
    return cli::report_error(e, std::cerr);
  }
  return cli::kExitUsage;
}
