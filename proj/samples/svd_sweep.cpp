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

// Trains the small ring classifier with and without an r1 penalty, then
// compares SVD compression and both pruning baselines across sparsities.

#include <cstdio>

#include "smoothcomp/analysis.hpp"
#include "smoothcomp/compress.hpp"
#include "smoothcomp/io/data.hpp"
#include "smoothcomp/nn/presets.hpp"
#include "smoothcomp/nn/train.hpp"
#include "smoothcomp/pruning.hpp"

using namespace smoothcomp;

int main() {
  const nn::Dataset train = io::synth_rings(400, 12, 0);
  const nn::Dataset test = io::synth_rings(200, 12, 1);

  for (double lambda : {0.0, 0.03}) {
    nn::Model model = nn::make_classifier({}, 0);
    nn::TrainConfig cfg;
    cfg.loss = nn::LossKind::cross_entropy;
    cfg.regularizer = reg::RegularizerKind::r1;
    cfg.lambda = lambda;
    cfg.optimizer.kind = nn::OptimizerKind::adam;
    cfg.optimizer.lr = 3e-3;
    cfg.schedule.kind = nn::ScheduleKind::cosine;
    cfg.epochs = 5;
    cfg.batch_size = 32;
    nn::train(model, train, cfg);

    const auto spec = analysis::spectrum(model);
    std::printf("lambda %g: accuracy %.3f, mean c(25%%) %.3f\n", lambda, analysis::accuracy(model, test),
                analysis::mean_cumulative_at_fraction(spec, 0.25));
    std::printf("  %-8s %-10s %-14s %-16s\n", "target", "svd", "l1_structured", "l1_unstructured");
    for (double s : {0.3, 0.5, 0.7, 0.9}) {
      const auto svd = compress::compress_model(model, s);
      const auto st = compress::prune_structured_l1(model, s);
      const auto un = compress::prune_unstructured_l1(model, s);
      std::printf("  %-8.1f %-10.3f %-14.3f %-16.3f\n", s, analysis::accuracy(svd.model, test),
                  analysis::accuracy(st.model, test), analysis::accuracy(un.model, test));
    }
  }
}
