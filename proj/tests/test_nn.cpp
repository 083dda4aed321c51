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
#include <numbers>

#include "gradcheck.hpp"
#include "smoothcomp/nn/network.hpp"
#include "smoothcomp/regularizers.hpp"

using namespace smoothcomp;
using namespace smoothcomp::nn;

TEST(Model, WeightShapesAndComposition) {
  Model m({3, 8, 8});
  m.add(LayerSpec::conv2d(3, 4, 3, 3, 2, 1));
  m.add(LayerSpec::act(Activation::relu));
  m.add(LayerSpec::flatten());
  m.add(LayerSpec::dense(64, 5));
  EXPECT_EQ(m.block(0).weight.shape(), (Shape{4, 3, 3, 3}));
  EXPECT_EQ(m.block(0).bias.shape(), (Shape{4}));
  EXPECT_EQ(m.block(3).weight.shape(), (Shape{5, 64}));
  EXPECT_EQ(m.output_shape(), (Shape{5}));
  EXPECT_EQ(m.parameter_count(), 4u * 27 + 4 + 5 * 64 + 5);
  EXPECT_NO_THROW(m.validate());
}

TEST(Model, RejectsNonComposingLayers) {
  Model m({3});
  m.add(LayerSpec::dense(3, 4));
  m.add(LayerSpec::dense(5, 2));
  EXPECT_THROW(m.validate(), DimensionError);
  Model z({2});
  EXPECT_THROW(z.add(LayerSpec::dense(0, 2)), ArgumentError);
}

TEST(Forward, IdentityWeight) {
  Model m({3});
  m.add(LayerSpec::dense(3, 3));
  m.block(0).weight = Tensor::identity(3);
  const Tensor x = Tensor::matrix({{1, -2, 3}, {0.5, 0, 7}});
  EXPECT_EQ(forward(m, x), x);
}

TEST(Forward, HandEvaluatedDense) {
  Model m({2});
  m.add(LayerSpec::dense(2, 1));
  m.block(0).weight = Tensor::matrix({{1, 1}});
  m.block(0).bias = Tensor::vector({0.5});
  EXPECT_DOUBLE_EQ(forward(m, Tensor::matrix({{1, 2}}))[0], 3.5);
}

TEST(Forward, ConvMatchesDirectConvolution) {
  Rng rng(30);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t c = 1 + rng.below(3), o = 1 + rng.below(4), hw = 4 + rng.below(4);
    const std::size_t stride = 1 + rng.below(2), pad = rng.below(2);
    Model m({c, hw, hw});
    m.add(LayerSpec::conv2d(c, o, 3, 3, stride, pad));
    m.block(0).weight = oracle::random_tensor(m.block(0).weight.shape(), rng);
    m.block(0).bias = oracle::random_tensor({o}, rng);
    const Tensor x = oracle::random_tensor({2, c, hw, hw}, rng);
    const Tensor y = forward(m, x);
    const std::vector<double> bias(m.block(0).bias.data().begin(), m.block(0).bias.data().end());
    for (std::size_t b = 0; b < 2; ++b) {
      const Tensor xb({c, hw, hw}, std::vector<double>(x.row(b).begin(), x.row(b).end()));
      const Tensor ref = oracle::direct_conv(xb, m.block(0).weight, bias, stride, pad);
      const Tensor yb(ref.shape(), std::vector<double>(y.row(b).begin(), y.row(b).end()));
      EXPECT_LT(max_abs_diff(yb, ref), 1e-12);
    }
  }
}

TEST(Forward, InputShapeMismatch) {
  Model m({3});
  m.add(LayerSpec::dense(3, 2));
  EXPECT_THROW(forward(m, Tensor({4, 2})), DimensionError);
}

TEST(Forward, NonFiniteOutputNamesLayer) {
  Model m({1});
  m.add(LayerSpec::dense(1, 1));
  m.block(0).weight = Tensor::matrix({{1e308}});
  ForwardTrace trace;
  try {
    forward(m, Tensor::matrix({{10.0}}), &trace);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos) << e.what();
  }
}

TEST(Loss, PerfectPredictionIsZero) {
  Model m({2});
  m.add(LayerSpec::dense(2, 2));
  m.block(0).weight = Tensor::identity(2);
  Dataset d;
  d.inputs = Tensor::matrix({{1, 2}, {3, 4}});
  d.targets = d.inputs;
  const auto lg = loss_and_grads(m, d, TrainConfig{});
  EXPECT_EQ(lg.total, 0.0);
  for (double g : lg.grads[0].weight.data()) EXPECT_EQ(g, 0.0);
}

TEST(Loss, UniformPredictorCrossEntropyIsLogC) {
  for (std::size_t c : {2u, 3u, 10u}) {
    const Tensor logits({4, c}, 0.7);
    const std::vector<std::size_t> labels{0, 1, c - 1, 0};
    EXPECT_NEAR(cross_entropy_loss(logits, labels).value, std::log(static_cast<double>(c)), 1e-12);
  }
}

TEST(Loss, RegularizerIsAdditive) {
  Rng rng(31);
  Model m = oracle::random_dense_model(Activation::relu, rng);
  const Dataset d = oracle::random_data(m, 4, LossKind::mse, rng);
  TrainConfig c0;
  TrainConfig c1;
  c1.regularizer = reg::RegularizerKind::r1;
  c1.lambda = 0.37;
  const double base = loss_and_grads(m, d, c0).total;
  EXPECT_NEAR(loss_and_grads(m, d, c1).total, base + 0.37 * reg::r1_penalty(m), 1e-14);
}

TEST(Gradients, FiniteDifferenceSuite) {
  auto cases = oracle::gradient_suite(32);
  for (auto& c : cases) {
    const auto r = oracle::check_gradients(c);
    const double tol = (c.config.regularizer == reg::RegularizerKind::nuc && c.config.lambda > 0) ? 1e-3 : 1e-4;
    EXPECT_LT(r.max_rel, tol) << c.name;
    EXPECT_LE(r.params, 2000u) << c.name;
  }
}

TEST(Gradients, SineAtDefaultFrequency) {
  Rng rng(33);
  oracle::GradCase c;
  c.model = Model({2});
  c.model.add(LayerSpec::dense(2, 6));
  c.model.add(LayerSpec::act(Activation::sine, 30.0));
  c.model.add(LayerSpec::dense(6, 6));
  c.model.add(LayerSpec::act(Activation::sine, 30.0));
  c.model.add(LayerSpec::dense(6, 3));
  initialize(c.model, 7);
  c.data = oracle::random_data(c.model, 5, LossKind::mse, rng);
  EXPECT_LT(oracle::check_gradients(c).max_rel, 1e-4);
}

TEST(Train, LeastSquaresSlope) {
  Model m({1});
  m.add(LayerSpec::dense(1, 1, false));
  Dataset d;
  d.inputs = Tensor::matrix({{-1}, {0.5}, {1}, {2}});
  d.targets = Tensor::matrix({{-2}, {1}, {2}, {4}});
  TrainConfig c;
  c.optimizer.lr = 0.1;
  c.epochs = 200;
  train(m, d, c);
  EXPECT_NEAR(m.block(0).weight[0], 2.0, 1e-3);
}

TEST(Train, CosineEndpoint) {
  Schedule s;
  s.kind = ScheduleKind::cosine;
  EXPECT_DOUBLE_EQ(s.lr_at(0, 0.5, 100), 0.5);
  EXPECT_LT(s.lr_at(99, 0.5, 100), 1e-3 * 0.5);
  s.kind = ScheduleKind::warmup_cosine;
  s.warmup_steps = 10;
  EXPECT_EQ(s.lr_at(0, 0.5, 100), 0.0);
  EXPECT_DOUBLE_EQ(s.lr_at(10, 0.5, 100), 0.5);
  EXPECT_LT(s.lr_at(99, 0.5, 100), 1e-3 * 0.5);
}

TEST(Train, MonotoneOnConvexProblem) {
  Rng rng(34);
  Model m({3});
  m.add(LayerSpec::dense(3, 2));
  initialize(m, 1);
  const Dataset d = oracle::random_data(m, 16, LossKind::mse, rng);
  TrainConfig c;
  c.optimizer.lr = 0.05;
  c.epochs = 50;
  const auto res = train(m, d, c);
  for (std::size_t i = 1; i < res.log.size(); ++i) EXPECT_LE(res.log[i].data_loss, res.log[i - 1].data_loss);
}

TEST(Train, SameSeedIsBitwiseIdentical) {
  auto run = [] {
    Rng rng(35);
    Model m = oracle::random_conv_model(Activation::relu, rng);
    const Dataset d = oracle::random_data(m, 12, LossKind::cross_entropy, rng);
    TrainConfig c;
    c.loss = LossKind::cross_entropy;
    c.regularizer = reg::RegularizerKind::r2;
    c.lambda = 0.1;
    c.optimizer.kind = OptimizerKind::adam;
    c.optimizer.lr = 0.01;
    c.batch_size = 5;
    c.epochs = 3;
    c.augment_pad = 1;
    c.seed = 9;
    train(m, d, c);
    return m;
  };
  EXPECT_TRUE(run() == run());
}

TEST(Train, DivergenceReportsLastGoodEpoch) {
  Model m({1});
  m.add(LayerSpec::dense(1, 1, false));
  m.block(0).weight[0] = 1.0;
  Dataset d;
  d.inputs = Tensor::matrix({{100}});
  d.targets = Tensor::matrix({{0}});
  TrainConfig c;
  c.optimizer.lr = 10.0;
  c.epochs = 1000;
  try {
    train(m, d, c);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.last_good_epoch(), 0);
  }
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.lambda = -1;
  EXPECT_THROW(c.validate(), ArgumentError);
  c = TrainConfig{};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), ArgumentError);
  c = TrainConfig{};
  c.optimizer.lr = 0;
  EXPECT_THROW(c.validate(), ArgumentError);
}

TEST(Presets, InrShapes) {
  InrPreset p;
  p.width = 16;
  const Model m = make_inr(p, 0);
  EXPECT_EQ(m.output_shape(), (Shape{3}));
  EXPECT_EQ(inr_hidden_layers(m).size(), 2u);
  const Model c = make_classifier(ClassifyPreset{}, 0);
  EXPECT_EQ(c.output_shape(), (Shape{2}));
}
