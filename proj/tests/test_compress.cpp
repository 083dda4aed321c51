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

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "smoothcomp/compress.hpp"
#include "smoothcomp/nn/network.hpp"
#include "smoothcomp/nn/presets.hpp"
#include "smoothcomp/pruning.hpp"

using namespace smoothcomp;
using namespace smoothcomp::compress;
using nn::Activation;
using nn::LayerSpec;
using nn::Model;

namespace {

Model random_dense(std::size_t in, std::size_t out, Rng& rng, bool bias = true) {
  Model m({in});
  m.add(LayerSpec::dense(in, out, bias));
  m.block(0).weight = oracle::random_matrix(out, in, rng);
  if (bias) m.block(0).bias = oracle::random_tensor({out}, rng);
  return m;
}

Tensor random_batch(const Model& m, std::size_t n, Rng& rng) {
  Shape s{n};
  s.insert(s.end(), m.input_shape().begin(), m.input_shape().end());
  return oracle::random_tensor(s, rng);
}

double output_gap(const Model& a, const Model& b, const Tensor& x) { return max_abs_diff(nn::forward(a, x), nn::forward(b, x)); }

/// Parameter count by walking every tensor once per distinct block.
std::size_t enumerate_params(const Model& m) {
  std::set<std::size_t> seen;
  std::size_t n = 0;
  for (const auto& l : m.layers()) {
    if (!l.parameterized() || !seen.insert(l.slot).second) continue;
    n += m.params()[l.slot].weight.size() + m.params()[l.slot].bias.size();
  }
  return n;
}

}  // namespace

TEST(RankFormula, DenseHandCases) {
  EXPECT_EQ(rank_for_sparsity_dense(4, 4, 0.4), 1u);
  EXPECT_EQ(factored_param_count(4, 4, 1), 12u);
  EXPECT_EQ(rank_for_sparsity_dense(4, 4, 0.0), 2u);
  EXPECT_EQ(rank_for_sparsity_dense(4, 4, 0.99), 1u);
  EXPECT_EQ(rank_for_sparsity_dense(100, 3, 0.0), 3u);
  EXPECT_THROW(rank_for_sparsity_dense(4, 4, 1.5), ArgumentError);
}

TEST(RankFormula, ConvHandCase) {
  EXPECT_EQ(rank_for_sparsity_conv(1, 4, 3, 3, 0.5), 1u);
  EXPECT_EQ(factored_param_count(9, 4, 1), 17u);
  EXPECT_DOUBLE_EQ(sparsity(40, 17), 0.575);
}

TEST(RankFormula, ConvAtZeroIsLargestNonIncreasingRank) {
  for (std::size_t n_i : {1u, 3u, 8u})
    for (std::size_t n_o : {4u, 16u}) {
      const std::size_t r = rank_for_sparsity_conv(n_i, n_o, 3, 3, 0.0);
      const std::size_t before = n_o * n_i * 9 + n_o;
      // rounding may land one above break-even; never two
      EXPECT_LE(factored_param_count(n_i * 9, n_o, r - 1), before);
      if (r < std::min(n_o, n_i * 9)) {
        EXPECT_GT(factored_param_count(n_i * 9, n_o, r + 1), before);
      }
    }
}

TEST(RankFormula, OneByOneConvReducesToDense) {
  for (double s : {0.0, 0.1, 0.35, 0.5, 0.8, 1.0})
    for (std::size_t n_i : {2u, 5u, 16u})
      for (std::size_t n_o : {3u, 16u}) EXPECT_EQ(rank_for_sparsity_conv(n_i, n_o, 1, 1, s), rank_for_sparsity_dense(n_i, n_o, s));
}

TEST(CompressDense, FullRankIdentityAndBias) {
  Rng rng(50);
  const Model m = random_dense(5, 4, rng);
  const Model c = compress_dense(m, 0, 4);
  EXPECT_LT(output_gap(m, c, random_batch(m, 20, rng)), 1e-10);
  const Tensor y0 = nn::forward(c, Tensor({1, 5}));
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(y0[j], m.block(0).bias[j]);
  EXPECT_TRUE(c.layer(0).factorized && c.layer(1).factorized);
  EXPECT_TRUE(c.block(0).bias.empty());
}

TEST(CompressDense, CountsAndRange) {
  Rng rng(51);
  const Model m = random_dense(7, 5, rng);
  for (std::size_t r = 1; r <= 5; ++r) EXPECT_EQ(compress_dense(m, 0, r).parameter_count(), r * (7 + 5) + 5);
  EXPECT_THROW(compress_dense(m, 0, 0), ArgumentError);
  EXPECT_THROW(compress_dense(m, 0, 6), ArgumentError);
  EXPECT_THROW(compress_dense(compress_dense(m, 0, 2), 0, 1), ArgumentError);
}

TEST(CompressDense, FunctionSpaceBound) {
  Rng rng(52);
  const Model m = random_dense(6, 6, rng, false);
  const auto sigma = singular_values(m.block(0).weight);
  for (std::size_t r = 1; r < 6; ++r) {
    const Model c = compress_dense(m, 0, r);
    for (int t = 0; t < 50; ++t) {
      const Tensor x = oracle::random_tensor({1, 6}, rng);
      const double gap = oracle::frob(nn::forward(m, x) - nn::forward(c, x));
      EXPECT_LE(gap, sigma[r] * oracle::frob(x) + 1e-12);
    }
  }
}

TEST(CompressConv, FullRankIdentityAndTailEnergy) {
  Rng rng(53);
  Model m({2, 6, 6});
  m.add(LayerSpec::conv2d(2, 5, 3, 3, 2, 1));
  m.block(0).weight = oracle::random_tensor({5, 2, 3, 3}, rng);
  m.block(0).bias = oracle::random_tensor({5}, rng);
  const Model full = compress_conv(m, 0, 5);
  EXPECT_LT(output_gap(m, full, random_batch(m, 10, rng)), 1e-10);
  EXPECT_EQ(full.layer(0).geometry.stride, 2u);
  EXPECT_EQ(full.layer(1).geometry.kernel_h, 1u);
  EXPECT_EQ(full.layer(1).geometry.pad, 0u);
  const auto sigma = singular_values(reg::flatten_for_reg(m.block(0).weight));
  Compressed c = compress_model(m, 0.0, {}, {2});
  EXPECT_NEAR(c.report.plan.layers[0].reconstruction_error, tail_energy(sigma, 2), 1e-12);
}

TEST(CompressConv, OneByOneMatchesDense) {
  Rng rng(54);
  Model conv({4, 1, 1});
  conv.add(LayerSpec::conv2d(4, 3, 1, 1));
  conv.block(0).weight = oracle::random_tensor({3, 4, 1, 1}, rng);
  conv.block(0).bias = oracle::random_tensor({3}, rng);
  Model dense({4});
  dense.add(LayerSpec::dense(4, 3));
  dense.block(0).weight = conv.block(0).weight.reshaped({3, 4});
  dense.block(0).bias = conv.block(0).bias;
  const Model cc = compress_conv(conv, 0, 2), cd = compress_dense(dense, 0, 2);
  const Tensor x = oracle::random_tensor({8, 4}, rng);
  const Tensor yc = nn::forward(cc, x.reshaped({8, 4, 1, 1}));
  EXPECT_LT(max_abs_diff(yc.reshaped({8, 3}), nn::forward(cd, x)), 1e-12);
  EXPECT_EQ(cc.parameter_count(), cd.parameter_count());
}

TEST(CompressModel, ReconstructionErrorMonotoneInRank) {
  Rng rng(55);
  const Model m = random_dense(8, 8, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t r = 1; r <= 8; ++r) {
    const double e = compress_model(m, 0.0, {}, {r}).report.plan.layers[0].reconstruction_error;
    EXPECT_LE(e, prev + 1e-12);
    prev = e;
  }
  EXPECT_LT(prev, 1e-10);
}

TEST(CompressModel, NegativeSparsityIsReported) {
  Rng rng(56);
  const Model m = random_dense(4, 4, rng);
  const auto c = compress_model(m, 0.0, {}, {4});
  EXPECT_LT(c.report.plan.achieved_sparsity, 0.0);
  CompressOptions skip;
  skip.skip_when_larger = true;
  const auto s = compress_model(m, 0.0, skip, {4});
  EXPECT_TRUE(s.report.plan.layers[0].skipped);
  EXPECT_EQ(s.report.plan.achieved_sparsity, 0.0);
  EXPECT_TRUE(s.model == m);
}

TEST(CompressModel, AccountingMatchesEnumeration) {
  const Model m = nn::make_classifier(nn::ClassifyPreset{}, 3);
  for (double s = 0.1; s < 0.95; s += 0.1) {
    const auto c = compress_model(m, s);
    EXPECT_EQ(c.report.plan.params_before, enumerate_params(m));
    EXPECT_EQ(c.report.plan.params_after, enumerate_params(c.model));
    std::size_t after = 0;
    for (const auto& lp : c.report.plan.layers) after += lp.params_after;
    EXPECT_EQ(after, c.report.plan.params_after);
    EXPECT_DOUBLE_EQ(c.report.plan.achieved_sparsity,
                     1.0 - static_cast<double>(enumerate_params(c.model)) / static_cast<double>(enumerate_params(m)));
  }
}

TEST(CompressModel, RejectsSecondPass) {
  const Model m = nn::make_classifier(nn::ClassifyPreset{}, 3);
  EXPECT_THROW(compress_model(compress_model(m, 0.5).model, 0.5), ArgumentError);
  EXPECT_THROW(compress_model(m, -0.1), ArgumentError);
}

TEST(CompressModel, InputIsNotMutated) {
  const Model m = nn::make_classifier(nn::ClassifyPreset{}, 4);
  const Model copy = m;
  (void)compress_model(m, 0.6);
  EXPECT_TRUE(m == copy);
}

TEST(Joint, CountingExample) {
  Rng rng(57);
  Model m({8});
  m.add(LayerSpec::dense(8, 8));
  m.add(LayerSpec::act(Activation::sine));
  m.add(LayerSpec::dense(8, 8));
  for (std::size_t i : {0u, 2u}) {
    m.block(i).weight = oracle::random_matrix(8, 8, rng);
    m.block(i).bias = oracle::random_tensor({8}, rng);
  }
  EXPECT_EQ(m.parameter_count(), 144u);
  const auto c = compress_joint_stacked(m, {0, 2}, 2);
  EXPECT_EQ(c.model.parameter_count(), 64u);
  EXPECT_EQ(enumerate_params(c.model), 64u);
  EXPECT_EQ(c.report.plan.layers[0].params_after, 64u);
  EXPECT_EQ(c.model.layer(0).slot, c.model.layer(3).slot);
  EXPECT_EQ(rank_for_sparsity_joint(m, {0, 2}, 1.0 - 64.0 / 144.0), 2u);
}

TEST(Joint, FullRankIdentity) {
  const Model m = nn::make_inr(nn::InrPreset{2, 3, 12, 3, 30.0, 30.0}, 5);
  const auto hidden = nn::inr_hidden_layers(m);
  ASSERT_EQ(hidden.size(), 3u);
  Rng rng(58);
  const auto c = compress_joint_stacked(m, hidden, 12);
  EXPECT_LT(output_gap(m, c.model, random_batch(m, 100, rng)), 1e-9);
}

TEST(Joint, SingleLayerEqualsCompressDense) {
  Rng rng(59);
  const Model m = random_dense(6, 4, rng);
  const auto j = compress_joint_stacked(m, {0}, 2);
  const Model d = compress_dense(m, 0, 2);
  EXPECT_LT(output_gap(j.model, d, random_batch(m, 10, rng)), 1e-12);
  EXPECT_EQ(j.model.parameter_count(), d.parameter_count());
}

TEST(Joint, RejectsMismatchedWidths) {
  Model m({4});
  m.add(LayerSpec::dense(4, 6));
  m.add(LayerSpec::dense(6, 6));
  EXPECT_THROW(compress_joint_stacked(m, {0, 1}, 2), ArgumentError);
  EXPECT_THROW(compress_joint_stacked(m, {1}, 7), ArgumentError);
}

TEST(Structured, LowestNormChannelRemoved) {
  const Tensor w = Tensor::matrix({{3, 0}, {0.5, -0.5}, {1, 1}});
  EXPECT_EQ(channels_to_remove(w, 0.34), (std::vector<std::size_t>{1}));
  const Tensor tie = Tensor::matrix({{1}, {2}, {1}});
  EXPECT_EQ(channels_to_remove(tie, 0.34), (std::vector<std::size_t>{0}));
}

TEST(Structured, KeptCount) {
  EXPECT_EQ(channels_kept(10, 0.0), 10u);
  EXPECT_EQ(channels_kept(10, 0.3), 7u);
  EXPECT_EQ(channels_kept(10, 0.35), 7u);
  EXPECT_EQ(channels_kept(3, 1.0), 1u);
}

TEST(Structured, ZeroSparsityIsIdentity) {
  const Model m = nn::make_classifier(nn::ClassifyPreset{}, 6);
  EXPECT_TRUE(prune_structured_l1(m, 0.0).model == m);
}

TEST(Structured, ConsumerSlicesAcrossFlatten) {
  // pruning channels of the last conv removes whole h*w blocks of dense inputs
  const Model m = nn::make_classifier(nn::ClassifyPreset{}, 7);
  const auto p = prune_structured_l1(m, 0.5);
  EXPECT_NO_THROW(p.model.validate());
  const auto pl = m.parameterized_layers();
  for (std::size_t k = 0; k + 1 < pl.size(); ++k)
    EXPECT_EQ(p.model.layer(pl[k]).out, channels_kept(m.layer(pl[k]).out, 0.5));
  EXPECT_EQ(p.model.layer(pl.back()).out, m.layer(pl.back()).out);

  // surviving channels keep their function: zero the removed channels' weights instead
  Model masked = m;
  for (std::size_t k = 0; k + 1 < pl.size(); ++k) {
    for (std::size_t c : channels_to_remove(m.block(pl[k]).weight, 0.5)) {
      auto& b = masked.block(pl[k]);
      const std::size_t per = b.weight.size() / b.weight.dim(0);
      for (std::size_t i = 0; i < per; ++i) b.weight[c * per + i] = 0.0;
      b.bias[c] = 0.0;
    }
  }
  // relu(0) = 0 so masked channels contribute nothing downstream
  Rng rng(60);
  EXPECT_LT(output_gap(masked, p.model, random_batch(m, 5, rng)), 1e-12);
}

TEST(Unstructured, HandCase) {
  Model m({2});
  m.add(LayerSpec::dense(2, 2));
  m.block(0).weight = Tensor::matrix({{1, -2}, {3, -4}});
  m.block(0).bias = Tensor::vector({0.1, 0.2});
  const auto p = prune_unstructured_l1(m, 0.5);
  EXPECT_EQ(p.model.block(0).weight, Tensor::matrix({{0, 0}, {3, -4}}));
  EXPECT_EQ(p.model.block(0).bias, m.block(0).bias);
  EXPECT_TRUE(prune_unstructured_l1(m, 0.0).model == m);
  const auto all = prune_unstructured_l1(m, 1.0);
  EXPECT_EQ(all.model.block(0).weight, Tensor({2, 2}));
  EXPECT_EQ(all.model.block(0).bias, m.block(0).bias);
}

TEST(Unstructured, TiesGoToLowerIndex) {
  Model m({3});
  m.add(LayerSpec::dense(3, 1, false));
  m.block(0).weight = Tensor::matrix({{2, -2, 2}});
  EXPECT_EQ(prune_unstructured_l1(m, 0.34).model.block(0).weight, Tensor::matrix({{0, -2, 2}}));
}
