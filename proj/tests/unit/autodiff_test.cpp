// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>
#include <numbers>

#include <gtest/gtest.h>

#include "magic/autodiff.hpp"
#include "magic/error.hpp"
#include "magic/rng.hpp"
#include "oracles.hpp"

namespace magic {
namespace {

Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, double lo = -2, double hi = 2) {
  Tensor t(r, c);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

using Builder = std::function<Var(Tape&, std::span<const Var>)>;

// Contracts the op output with fixed random weights so every output entry
// contributes to the scalar, then compares tape gradients with central
// differences for every input.
double max_relative_error(const std::vector<Tensor>& inputs, const Builder& build, std::uint64_t seed = 1) {
  Tensor weights;
  auto loss_of = [&](const std::vector<Tensor>& xs, std::vector<Tensor>* grads) {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& x : xs) vars.push_back(tape.parameter(x));
    const Var out = build(tape, vars);
    if (weights.empty()) {
      Rng rng(seed);
      weights = random_tensor(rng, out.rows(), out.cols(), 0.5, 1.5);
    }
    const Var loss = sum(mul_const(out, weights));
    const double value = loss.value()[0];
    if (grads) {
      const Gradients g = tape.backward(loss);
      for (const Var& v : vars) grads->push_back(g[v]);
    }
    return value;
  };
  std::vector<Tensor> analytic;
  loss_of(inputs, &analytic);
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<double> flat(inputs[k].data().begin(), inputs[k].data().end());
    const std::vector<double> numeric = testing::central_difference(
        [&](const std::vector<double>& x) {
          std::vector<Tensor> xs = inputs;
          std::copy(x.begin(), x.end(), xs[k].data().begin());
          return loss_of(xs, nullptr);
        },
        flat, 1e-5);
    for (std::size_t i = 0; i < flat.size(); ++i) {
      const double a = analytic[k][i], n = numeric[i];
      worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}));
    }
  }
  return worst;
}

TEST(Elementwise, LeakyReluDefinition) {
  Tape tape;
  const Var x = tape.constant(Tensor::from_rows({{-1.0, 2.0}}));
  const Var y = leaky_relu(x, 0.2);
  EXPECT_DOUBLE_EQ(y.value()[0], -0.2);
  EXPECT_DOUBLE_EQ(y.value()[1], 2.0);
}

TEST(Elementwise, EluAtZeroAndMinusOne) {
  Tape tape;
  const Var y = elu(tape.constant(Tensor::from_rows({{0.0, -1.0}})), 1.0);
  EXPECT_EQ(y.value()[0], 0.0);
  EXPECT_NEAR(y.value()[1], std::exp(-1.0) - 1.0, 1e-15);
  EXPECT_NEAR(y.value()[1], -0.63212, 1e-5);
}

TEST(Elementwise, LogOfNonPositiveThrows) {
  Tape tape;
  EXPECT_THROW(log(tape.constant(Tensor::from_rows({{1.0, 0.0}}))), NumericError);
}

TEST(Elementwise, BinaryShapeMismatchThrows) {
  Tape tape;
  EXPECT_THROW(add(tape.constant(Tensor(2, 2)), tape.constant(Tensor(2, 3))), ShapeError);
  EXPECT_THROW(mul(tape.constant(Tensor(1, 2)), tape.constant(Tensor(2, 1))), ShapeError);
}

TEST(Elementwise, NonFiniteResultIsAnError) {
  Tape tape;
  EXPECT_THROW(exp(tape.constant(Tensor::from_rows({{1000.0}}))), NumericError);
}

TEST(SoftmaxMasked, Examples) {
  Tape tape;
  Mask all(1, 2, true);
  EXPECT_EQ(softmax_masked(tape.constant(Tensor::from_rows({{0, 0}})), all).value(), Tensor::from_rows({{0.5, 0.5}}));
  const Var s = softmax_masked(tape.constant(Tensor::from_rows({{std::log(2.0), 0}})), all);
  EXPECT_NEAR(s.value()[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.value()[1], 1.0 / 3.0, 1e-15);

  Mask hide(1, 3, true);
  hide.set(0, 2, false);
  const Var h = softmax_masked(tape.constant(Tensor::from_rows({{5, 1, 9}})), hide);
  EXPECT_EQ(h.value()[2], 0.0);
  EXPECT_NEAR(h.value()[0], std::exp(5.0) / (std::exp(5.0) + std::exp(1.0)), 1e-15);
}

TEST(SoftmaxMasked, AllMaskedRowThrows) {
  Tape tape;
  Mask m(2, 2, true);
  m.set(1, 0, false);
  m.set(1, 1, false);
  EXPECT_THROW(softmax_masked(tape.constant(Tensor(2, 2)), m), ShapeError);
}

TEST(SoftmaxMasked, RowsSumToOneAndMaskedAreZero) {
  Rng rng(17);
  for (int t = 0; t < 50; ++t) {
    const std::size_t r = 1 + rng.below(6), c = 1 + rng.below(8);
    Mask m(r, c);
    for (std::size_t i = 0; i < r; ++i) {
      m.set(i, rng.below(c), true);
      for (std::size_t j = 0; j < c; ++j)
        if (rng.uniform() < 0.5) m.set(i, j, true);
    }
    Tape tape;
    const Tensor s = softmax_masked(tape.constant(random_tensor(rng, r, c, -30, 30)), m).value();
    for (std::size_t i = 0; i < r; ++i) {
      double total = 0;
      for (std::size_t j = 0; j < c; ++j) {
        if (!m(i, j)) EXPECT_EQ(s(i, j), 0.0);
        total += s(i, j);
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(SoftmaxMasked, LargeLogitsAreStable) {
  Tape tape;
  const Var s = softmax_masked(tape.constant(Tensor::from_rows({{1000, 999}})), Mask(1, 2, true));
  EXPECT_NEAR(s.value()[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
}

TEST(Backward, LinearMapGradient) {
  Tape tape;
  const Var w = tape.parameter(Tensor::from_rows({{1, 2, 3}, {4, 5, 6}}));
  const Var x = tape.constant(Tensor::from_rows({{7}, {8}, {9}}));
  const Gradients g = tape.backward(sum(matmul(w, x)));
  EXPECT_EQ(g[w], Tensor::from_rows({{7, 8, 9}, {7, 8, 9}}));
}

TEST(Backward, QuadraticGradient) {
  Tape tape;
  const Tensor a0 = Tensor::from_rows({{1.5, -2, 0.25}});
  const Var a = tape.parameter(a0);
  const Gradients g = tape.backward(sum(mul(a, a)));
  EXPECT_EQ(g[a], Tensor::from_rows({{3, -4, 0.5}}));
}

TEST(Backward, RequiresScalarLoss) {
  Tape tape;
  const Var a = tape.parameter(Tensor(1, 2));
  EXPECT_THROW(tape.backward(a), TapeError);
}

TEST(Backward, ClearsTapeAndRejectsStaleHandles) {
  Tape tape;
  const Var a = tape.parameter(Tensor::from_rows({{2}}));
  const Var loss = sum(mul(a, a));
  const Gradients g = tape.backward(loss);
  EXPECT_EQ(tape.size(), 0u);
  EXPECT_THROW(tape.backward(loss), TapeError);
  EXPECT_THROW(a.value(), TapeError);
  const Var fresh = tape.parameter(Tensor::from_rows({{1}}));
  EXPECT_THROW(g[fresh], TapeError);
}

TEST(Backward, MixingTapesThrows) {
  Tape t1, t2;
  EXPECT_THROW(add(t1.constant(Tensor(1, 1)), t2.constant(Tensor(1, 1))), TapeError);
}

TEST(Backward, SharedSubexpressionAccumulates) {
  Tape tape;
  const Var a = tape.parameter(Tensor::from_rows({{3}}));
  const Var b = add(a, a);
  const Gradients g = tape.backward(sum(mul(b, a)));  // 2a^2
  EXPECT_EQ(g[a][0], 12.0);
}

TEST(ConcatCols, SingleIsIdentityAndOrderPreserved) {
  Tape tape;
  const Tensor x = Tensor::from_rows({{1, 2, 3}, {4, 5, 6}});
  const Var a = tape.constant(x);
  EXPECT_EQ(concat_cols(std::vector<Var>{a}).value(), x);
  const Var b = tape.constant(Tensor::from_rows({{7, 8, 9}, {10, 11, 12}}));
  const Tensor c = concat_cols(std::vector<Var>{a, b}).value();
  EXPECT_EQ(c, Tensor::from_rows({{1, 2, 3, 7, 8, 9}, {4, 5, 6, 10, 11, 12}}));
}

TEST(ConcatCols, RowMismatchThrows) {
  Tape tape;
  EXPECT_THROW(concat_cols(std::vector<Var>{tape.constant(Tensor(2, 1)), tape.constant(Tensor(3, 1))}), ShapeError);
}

TEST(ConcatCols, SumBackwardIsOnes) {
  Tape tape;
  const Var a = tape.parameter(Tensor(2, 3, 0.5)), b = tape.parameter(Tensor(2, 1, -1));
  const Gradients g = tape.backward(sum(concat_cols(std::vector<Var>{a, b})));
  EXPECT_EQ(g[a], Tensor(2, 3, 1.0));
  EXPECT_EQ(g[b], Tensor(2, 1, 1.0));
}

// Gradient-check property, one case per differentiable op.
class OpGradient : public ::testing::TestWithParam<int> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  Rng rng(derive_seed({99, static_cast<std::uint64_t>(GetParam())}));
  const std::vector<std::size_t> row_ptr{0, 2, 3, 6};
  const std::vector<std::size_t> col_idx{0, 1, 1, 0, 1, 2};
  const std::vector<unsigned char> keep{1, 0, 1, 1, 1, 0};
  const std::vector<std::size_t> offsets{0, 2};
  const std::vector<std::size_t> labels{1, 0, 2};
  Mask mask(3, 3, true);
  mask.set(0, 2, false);
  Mask keep_dense(3, 3, true);
  keep_dense.set(1, 0, false);
  const Tensor constant = random_tensor(rng, 3, 3);

  struct Case {
    std::vector<Tensor> inputs;
    Builder build;
  };
  std::vector<Case> cases{
      {{random_tensor(rng, 3, 4), random_tensor(rng, 4, 2)}, [](Tape&, auto v) { return matmul(v[0], v[1]); }},
      {{random_tensor(rng, 3, 3), random_tensor(rng, 3, 3)}, [](Tape&, auto v) { return add(v[0], v[1]); }},
      {{random_tensor(rng, 3, 3), random_tensor(rng, 3, 3)}, [](Tape&, auto v) { return sub(v[0], v[1]); }},
      {{random_tensor(rng, 3, 3), random_tensor(rng, 3, 3)}, [](Tape&, auto v) { return mul(v[0], v[1]); }},
      {{random_tensor(rng, 3, 3)}, [](Tape&, auto v) { return scale(v[0], -1.7); }},
      {{random_tensor(rng, 3, 3), random_tensor(rng, 1, 3)}, [](Tape&, auto v) { return add_row(v[0], v[1]); }},
      {{random_tensor(rng, 3, 3)}, [&](Tape&, auto v) { return mul_const(v[0], constant); }},
      {{random_tensor(rng, 3, 3)}, [](Tape&, auto v) { return leaky_relu(v[0], 0.2); }},
      {{random_tensor(rng, 3, 3)}, [](Tape&, auto v) { return elu(v[0], 1.0); }},
      {{random_tensor(rng, 3, 3)}, [](Tape&, auto v) { return exp(v[0]); }},
      {{random_tensor(rng, 3, 3, 0.5, 2)}, [](Tape&, auto v) { return log(v[0]); }},
      {{random_tensor(rng, 3, 3)}, [](Tape&, auto v) { return sum(v[0]); }},
      {{random_tensor(rng, 3, 2), random_tensor(rng, 3, 3)},
       [](Tape&, auto v) { return concat_cols(std::vector<Var>{v[0], v[1]}); }},
      {{random_tensor(rng, 4, 2)}, [](Tape&, auto v) { return slice_rows(v[0], 1, 3); }},
      {{random_tensor(rng, 3, 2)},
       [](Tape&, auto v) { return gather_rows(v[0], std::vector<std::size_t>{2, 0, 2, 1}); }},
      {{random_tensor(rng, 3, 3)}, [&](Tape&, auto v) { return softmax_masked(v[0], mask); }},
      {{random_tensor(rng, 3, 3)}, [](Tape&, auto v) { return softmax_rows(v[0]); }},
      {{random_tensor(rng, 3, 3, 0.1, 1)}, [&](Tape&, auto v) { return mask_renormalize(v[0], keep_dense); }},
      {{random_tensor(rng, 3, 1), random_tensor(rng, 4, 1)}, [](Tape&, auto v) { return outer_add(v[0], v[1]); }},
      {{random_tensor(rng, 6, 1)}, [&](Tape&, auto v) { return segment_softmax(v[0], row_ptr); }},
      {{random_tensor(rng, 6, 1, 0.1, 1)},
       [&](Tape&, auto v) { return segment_renormalize(v[0], keep, row_ptr); }},
      {{random_tensor(rng, 6, 1), random_tensor(rng, 3, 2)},
       [&](Tape&, auto v) { return spmm(v[0], row_ptr, col_idx, v[1]); }},
      {{random_tensor(rng, 3, 2)}, [&](Tape&, auto v) { return segment_mean(v[0], offsets); }},
      {{random_tensor(rng, 3, 3)}, [&](Tape&, auto v) { return cross_entropy(v[0], labels); }},
  };
  ASSERT_LT(static_cast<std::size_t>(GetParam()), cases.size());
  const Case& c = cases[GetParam()];
  EXPECT_LT(max_relative_error(c.inputs, c.build), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range(0, 24));

TEST(CrossEntropy, FloorKeepsLossFinite) {
  Tape tape;
  const Var l = cross_entropy(tape.constant(Tensor::from_rows({{0.0, 500.0}})), std::vector<std::size_t>{0});
  EXPECT_NEAR(l.value()[0], -std::log(kProbabilityFloor), 1e-9);
}

TEST(CrossEntropy, LabelOutOfRangeThrows) {
  Tape tape;
  EXPECT_THROW(cross_entropy(tape.constant(Tensor(1, 2)), std::vector<std::size_t>{2}), ShapeError);
}

TEST(Determinism, RepeatedOpSequenceIsBitIdentical) {
  auto run = [] {
    Rng rng(4);
    Tape tape;
    const Var a = tape.parameter(random_tensor(rng, 4, 4));
    const Var b = tape.constant(random_tensor(rng, 4, 4));
    const Var y = softmax_rows(elu(matmul(a, b), 1.0));
    const Tensor value = y.value();
    const Gradients g = tape.backward(sum(mul(y, y)));
    return std::make_pair(value, g[a]);
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace magic
