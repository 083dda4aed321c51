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
#include <limits>

#include "oracles.hpp"
#include "smoothcomp/linalg.hpp"
#include "smoothcomp/tensor.hpp"

using smoothcomp::DimensionError;
using smoothcomp::Rng;
using smoothcomp::Tensor;

TEST(Tensor, ShapeInvariants) {
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_THROW(Tensor({2, 0}), DimensionError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  EXPECT_THROW(t.reshaped({4, 2}), DimensionError);
  EXPECT_TRUE(Tensor().empty());
}

TEST(Tensor, ElementwiseChecksShapes) {
  Tensor a({2, 2}, 1.0), b({2, 3}, 1.0);
  EXPECT_THROW(a += b, DimensionError);
  EXPECT_THROW(a - b, DimensionError);
}

TEST(Matmul, IdentityIsNeutral) {
  Rng rng(1);
  const Tensor a = oracle::random_matrix(2, 2, rng);
  EXPECT_EQ(smoothcomp::matmul(Tensor::identity(2), a), a);
}

TEST(Matmul, HandEvaluated) {
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  const Tensor b = Tensor::matrix({{1}, {1}});
  EXPECT_EQ(smoothcomp::matmul(a, b), Tensor::matrix({{3}, {7}}));
}

TEST(Matmul, MatchesTripleLoopAndTransposedVariants) {
  Rng rng(2);
  const Tensor a = oracle::random_matrix(5, 4, rng), b = oracle::random_matrix(4, 3, rng);
  const Tensor ref = oracle::naive_matmul(a, b);
  EXPECT_LT(smoothcomp::max_abs_diff(smoothcomp::matmul(a, b), ref), 1e-14);
  EXPECT_LT(smoothcomp::max_abs_diff(smoothcomp::matmul_tn(smoothcomp::transpose(a), b), ref), 1e-14);
  EXPECT_LT(smoothcomp::max_abs_diff(smoothcomp::matmul_nt(a, smoothcomp::transpose(b)), ref), 1e-14);
}

TEST(Matmul, Associative) {
  Rng rng(3);
  const Tensor a = oracle::random_matrix(3, 3, rng), b = oracle::random_matrix(3, 3, rng),
               c = oracle::random_matrix(3, 3, rng);
  using smoothcomp::matmul;
  EXPECT_LT(smoothcomp::max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))), 1e-12);
}

TEST(Matmul, InnerDimensionMismatch) {
  EXPECT_THROW(smoothcomp::matmul(Tensor({2, 3}), Tensor({2, 3})), DimensionError);
  EXPECT_THROW(smoothcomp::matmul(Tensor({2, 3, 1}), Tensor({3, 3})), DimensionError);
}

TEST(Norms, Basics) {
  EXPECT_EQ(smoothcomp::frobenius_norm(Tensor({3, 3})), 0.0);
  EXPECT_EQ(smoothcomp::l1_norm(Tensor({3, 3})), 0.0);
  const Tensor a = Tensor::matrix({{3, 4}});
  EXPECT_DOUBLE_EQ(smoothcomp::frobenius_norm(a), 5.0);
  EXPECT_DOUBLE_EQ(smoothcomp::l1_norm(a), 7.0);
  Tensor bad = a;
  bad[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(smoothcomp::frobenius_norm(bad), smoothcomp::NumericError);
}

TEST(Norms, FrobeniusEqualsSingularValueEnergy) {
  Rng rng(4);
  const Tensor a = oracle::random_matrix(4, 3, rng);
  double e = 0.0;
  for (double s : smoothcomp::singular_values(a)) e += s * s;
  EXPECT_NEAR(std::pow(smoothcomp::frobenius_norm(a), 2), e, 1e-10);
}
