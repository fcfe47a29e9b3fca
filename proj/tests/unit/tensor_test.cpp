// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "magic/error.hpp"
#include "magic/rng.hpp"
#include "magic/tensor.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace magic {
namespace {

using testing::Matrix;

Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c) {
  Tensor t(r, c);
  for (double& v : t.data()) v = rng.uniform(-2, 2);
  return t;
}

TEST(Tensor, ShapeAndStorage) {
  Tensor t(2, 3, 1.5);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t(1, 2), 1.5);
  EXPECT_THROW(Tensor(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(Tensor, FromRowsRejectsRagged) {
  EXPECT_THROW(Tensor::from_rows({{1, 2}, {3}}), ShapeError);
  const Tensor t = Tensor::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(t(1, 0), 3.0);
}

TEST(Tensor, FiniteCheck) {
  Tensor t(1, 2);
  EXPECT_TRUE(t.all_finite());
  t[1] = std::nan("");
  EXPECT_FALSE(t.all_finite());
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(matmul_plain(a, Tensor::identity(2)), a);
}

TEST(Matmul, RowTimesColumnIsDotProduct) {
  const Tensor r = matmul_plain(Tensor::from_rows({{1, 2}}), Tensor::from_rows({{3}, {4}}));
  EXPECT_EQ(r, Tensor::from_rows({{11}}));
}

TEST(Matmul, MatchesTripleLoopReference) {
  Rng rng(5);
  const Tensor a = random_tensor(rng, 5, 4), b = random_tensor(rng, 4, 3);
  const Matrix want = testing::ref_matmul(testing::to_matrix(a), testing::to_matrix(b));
  const Tensor got = matmul_plain(a, b);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(got(i, j), want[i][j], 1e-12);
}

TEST(Matmul, ShapeMismatchThrows) {
  EXPECT_THROW(matmul_plain(Tensor(2, 3), Tensor(2, 3)), ShapeError);
}

TEST(Matmul, AssociativeWithinTolerance) {
  Rng rng(8);
  const Tensor a = random_tensor(rng, 8, 8), b = random_tensor(rng, 8, 8), c = random_tensor(rng, 8, 8);
  const Tensor left = matmul_plain(matmul_plain(a, b), c);
  const Tensor right = matmul_plain(a, matmul_plain(b, c));
  for (std::size_t i = 0; i < left.size(); ++i) EXPECT_NEAR(left[i], right[i], 1e-9);
}

TEST(Matmul, Deterministic) {
  Rng rng(9);
  const Tensor a = random_tensor(rng, 6, 7), b = random_tensor(rng, 7, 5);
  EXPECT_EQ(matmul_plain(a, b), matmul_plain(a, b));
}

TEST(Transpose, SwapsIndices) {
  const Tensor t = transpose(Tensor::from_rows({{1, 2, 3}, {4, 5, 6}}));
  EXPECT_EQ(t, Tensor::from_rows({{1, 4}, {2, 5}, {3, 6}}));
}

TEST(Rng, DeriveSeedIsOrderSensitive) {
  EXPECT_EQ(derive_seed({1, 2}), derive_seed({1, 2}));
  EXPECT_NE(derive_seed({1, 2}), derive_seed({2, 1}));
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(3);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  rng.shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7}));
}

}  // namespace
}  // namespace magic
