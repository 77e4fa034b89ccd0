// Copyright 2026 The polyseg Authors.
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

#include "polyseg/grad_check.hpp"
#include "polyseg/random.hpp"
#include "polyseg/tensor.hpp"

namespace polyseg {
namespace {

using D = Tensor<double>;

D random_tensor(Rng& rng, Shape shape, double range = 1.0) {
  D t = D::zeros(std::move(shape), true);
  for (double& v : t.data()) v = rng.uniform(-range, range);
  return t;
}

TEST(Tensor, ShapeValidation) {
  EXPECT_THROW(D::zeros({}), ShapeError);
  EXPECT_THROW(D::zeros({2, 0}), ShapeError);
  EXPECT_THROW(D::zeros({1, 2, 3}), ShapeError);
  EXPECT_THROW(D::from({2, 2}, {1, 2, 3}), ShapeError);
  const D t = D::from({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.at(1, 2), 6);
}

TEST(Ops, SigmoidOfZero) {
  Graph<double> g;
  EXPECT_DOUBLE_EQ(ops::sigmoid(g, D::from({1}, {0.0})).item(), 0.5);
  EXPECT_NEAR(ops::sigmoid_value(-800.0), 0.0, 1e-300);
  EXPECT_DOUBLE_EQ(ops::sigmoid_value(800.0), 1.0);
}

TEST(Ops, IdentityMatmul) {
  Graph<double> g;
  const D eye = D::from({2, 2}, {1, 0, 0, 1});
  const D a = D::from({2, 3}, {1.5, -2, 3, 4, 5, -6.25});
  const D out = ops::matmul(g, eye, a);
  EXPECT_EQ(std::vector<double>(out.data().begin(), out.data().end()),
            std::vector<double>(a.data().begin(), a.data().end()));
  EXPECT_THROW(ops::matmul(g, a, a), ShapeError);
  const D at = ops::matmul(g, eye, D::from({3, 2}, {1.5, 4, -2, 5, 3, -6.25}), true);
  EXPECT_EQ(at.at(1, 2), -6.25);
}

TEST(Ops, LogSumExpOfZeros) {
  Graph<double> g;
  EXPECT_NEAR(ops::logsumexp(g, D::zeros({4}), 0).item(), std::log(4.0), 1e-12);
  EXPECT_NEAR(ops::logsumexp(g, D::from({2}, {1000.0, 1000.0}), 0).item(), 1000.0 + std::log(2.0), 1e-9);
  const D rows = ops::logsumexp(g, D::from({2, 2}, {0, 0, 1, 1}), 1);
  EXPECT_EQ(rows.shape(), (Shape{2, 1}));
  EXPECT_NEAR(rows[1], 1 + std::log(2.0), 1e-12);
  EXPECT_THROW(ops::logsumexp(g, D::zeros({4}), 1), ShapeError);
}

TEST(Ops, ShapeErrorsNameTheOp) {
  Graph<double> g;
  try {
    ops::mul(g, D::zeros({2, 3}), D::zeros({3, 2}));
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("mul"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("(2,3)"), std::string::npos);
  }
  EXPECT_THROW(ops::add(g, D::zeros({2, 3}), D::zeros({2})), ShapeError);
  EXPECT_THROW(ops::concat(g, std::vector<D>{D::zeros({2, 3}), D::zeros({3, 3})}), ShapeError);
}

TEST(Ops, GatherOutOfRange) {
  Graph<double> g;
  const D table = D::zeros({3, 2});
  const std::vector<std::int32_t> bad{0, 3};
  EXPECT_THROW(ops::gather(g, table, bad), IndexError);
  const std::vector<std::int32_t> neg{-1};
  EXPECT_THROW(ops::gather(g, table, neg), IndexError);
}

TEST(Backward, SumGivesOnes) {
  D x = D::from({2, 2}, {1, 2, 3, 4}, true);
  Graph<double> g;
  D loss = ops::sum(g, x);
  g.backward(loss);
  for (double v : x.grad()) EXPECT_EQ(v, 1.0);
}

TEST(Backward, SquareGivesTwoX) {
  D x = D::from({3}, {1, -2, 0.5}, true);
  Graph<double> g;
  D loss = ops::sum(g, ops::mul(g, x, x));
  g.backward(loss);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(x.grad()[i], 2 * x[i]);
}

TEST(Backward, AccumulatesOverUses) {
  D x = D::from({2}, {0.3, 0.7}, true);
  Graph<double> g;
  D loss = ops::sum(g, ops::add(g, x, x));
  g.backward(loss);
  EXPECT_EQ(x.grad()[0], 2.0);
  EXPECT_EQ(x.grad()[1], 2.0);
}

TEST(Backward, RejectsNonScalarAndRunsOnce) {
  D x = D::from({2}, {1, 2}, true);
  Graph<double> g;
  D y = ops::scale(g, x, 3.0);
  EXPECT_THROW(g.backward(y), ShapeError);
  D loss = ops::sum(g, y);
  g.backward(loss);
  EXPECT_EQ(g.size(), 0u);
  EXPECT_EQ(x.grad()[0], 3.0);
}

TEST(Backward, ConstantsGetNoGradient) {
  D x = D::from({2}, {1, 2}, true);
  D c = D::from({2}, {5, 6});
  Graph<double> g;
  D loss = ops::sum(g, ops::mul(g, x, c));
  g.backward(loss);
  EXPECT_FALSE(c.has_grad());
  EXPECT_EQ(x.grad()[1], 6.0);
}

TEST(Backward, NoRecordsWhenNotRecording) {
  D x = D::from({2}, {1, 2}, true);
  Graph<double> g(false);
  D loss = ops::sum(g, ops::tanh(g, x));
  EXPECT_EQ(g.size(), 0u);
  EXPECT_FALSE(loss.requires_grad());
}

// Each primitive against central differences at 64-bit precision.
class OpGradTest : public ::testing::Test {
 protected:
  Rng rng_{2024};
  template <typename F>
  void check(F&& f, std::vector<std::pair<std::string, D>> params, double tol = 1e-5) {
    const auto report = grad_check(f, params, 1e-5, tol);
    for (const auto& e : report.entries) {
      EXPECT_LT(e.max_rel_error, tol) << e.name << " analytic " << e.analytic << " numeric " << e.numeric;
    }
  }
  // Random weights so that every output entry influences the loss differently.
  D weights(Shape s) { return random_tensor(rng_, std::move(s)); }
  D weigh(Graph<double>& g, const D& y, const D& w) { return ops::sum(g, ops::mul(g, y, w)); }
};

TEST_F(OpGradTest, Matmul) {
  D a = random_tensor(rng_, {3, 4}), b = random_tensor(rng_, {4, 2}), bt = random_tensor(rng_, {2, 4});
  D w = weights({3, 2});
  check([&](Graph<double>& g) { return weigh(g, ops::matmul(g, a, b), w); }, {{"a", a}, {"b", b}});
  check([&](Graph<double>& g) { return weigh(g, ops::matmul(g, a, bt, true), w); }, {{"a", a}, {"bt", bt}});
}

TEST_F(OpGradTest, AddAndBroadcast) {
  D a = random_tensor(rng_, {3, 4}), b = random_tensor(rng_, {3, 4}), bias = random_tensor(rng_, {4});
  D w = weights({3, 4});
  check([&](Graph<double>& g) { return weigh(g, ops::add(g, a, b), w); }, {{"a", a}, {"b", b}});
  check([&](Graph<double>& g) { return weigh(g, ops::add(g, a, bias), w); }, {{"a", a}, {"bias", bias}});
}

TEST_F(OpGradTest, ElementwiseAndActivations) {
  D a = random_tensor(rng_, {3, 4}, 2.0), b = random_tensor(rng_, {3, 4});
  D w = weights({3, 4});
  check([&](Graph<double>& g) { return weigh(g, ops::mul(g, a, b), w); }, {{"a", a}, {"b", b}});
  check([&](Graph<double>& g) { return weigh(g, ops::sigmoid(g, a), w); }, {{"a", a}});
  check([&](Graph<double>& g) { return weigh(g, ops::tanh(g, a), w); }, {{"a", a}});
  check([&](Graph<double>& g) { return weigh(g, ops::scale(g, a, -1.7), w); }, {{"a", a}});
}

TEST_F(OpGradTest, ConcatSliceStack) {
  D a = random_tensor(rng_, {3, 2}), b = random_tensor(rng_, {3, 3}), c = random_tensor(rng_, {2, 5});
  D w5 = weights({3, 5}), w35 = weights({5, 5}), w_slice = weights({3, 2}), w_rows = weights({2, 5});
  check([&](Graph<double>& g) { return weigh(g, ops::concat(g, std::vector<D>{a, b}), w5); }, {{"a", a}, {"b", b}});
  check(
      [&](Graph<double>& g) {
        return weigh(g, ops::stack_rows(g, std::vector<D>{ops::concat(g, std::vector<D>{a, b}), c}), w35);
      },
      {{"a", a}, {"b", b}, {"c", c}});
  check([&](Graph<double>& g) { return weigh(g, ops::slice_cols(g, b, 1, 2), w_slice); }, {{"b", b}});
  check([&](Graph<double>& g) { return weigh(g, ops::slice_rows(g, c, 0, 2), w_rows); }, {{"c", c}});
}

TEST_F(OpGradTest, GatherWithRepeats) {
  D table = random_tensor(rng_, {4, 3});
  D w = weights({5, 3});
  const std::vector<std::int32_t> ids{2, 0, 2, 3, 2};
  check([&](Graph<double>& g) { return weigh(g, ops::gather(g, table, ids), w); }, {{"table", table}});
}

TEST_F(OpGradTest, LogSumExpBothAxes) {
  D a = random_tensor(rng_, {3, 4}, 3.0);
  D w_rows = weights({3, 1}), w_cols = weights({1, 4});
  D v = random_tensor(rng_, {5}, 3.0);
  check([&](Graph<double>& g) { return weigh(g, ops::logsumexp(g, a, 1), w_rows); }, {{"a", a}});
  check([&](Graph<double>& g) { return weigh(g, ops::logsumexp(g, a, 0), w_cols); }, {{"a", a}});
  check([&](Graph<double>& g) { return ops::logsumexp(g, v, 0); }, {{"v", v}});
}

TEST_F(OpGradTest, DropoutMaskIsAConstantFactor) {
  D a = random_tensor(rng_, {4, 5});
  Rng mask_rng(3);
  const D mask = ops::dropout_mask<double>(mask_rng, {4, 5}, 0.5);
  for (double m : mask.data()) EXPECT_TRUE(m == 0.0 || m == 2.0);
  D w = weights({4, 5});
  check([&](Graph<double>& g) { return weigh(g, ops::dropout_mask_apply(g, a, mask), w); }, {{"a", a}});
  EXPECT_THROW(ops::dropout_mask<double>(mask_rng, {2}, 1.0), ConfigError);
}

TEST(DropoutMask, KeepRateAndScale) {
  Rng rng(11);
  const auto mask = ops::dropout_mask<float>(rng, {100, 100}, 0.3);
  double kept = 0, total = 0;
  for (float m : mask.data()) {
    kept += m > 0;
    total += m;
  }
  EXPECT_NEAR(kept / 10000.0, 0.7, 0.02);
  EXPECT_NEAR(total / 10000.0, 1.0, 0.03);
}

TEST(GradCheck, SigmoidOfLinearMap) {
  Rng rng(7);
  D w = random_tensor(rng, {3, 4}, 0.1);
  const D x = D::from({4, 1}, {0.5, -1, 2, 0.25});
  const auto report = grad_check([&](Graph<double>& g) { return ops::sum(g, ops::sigmoid(g, ops::matmul(g, w, x))); },
                                 {{"w", w}}, 1e-5, 1e-6);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(GradCheck, RichardsonCancelsLowOrderTruncation) {
  // Cubic: central differences carry an h^2 error, the extrapolated scheme none.
  D x = D::from({3}, {0.9, -1.7, 2.2}, true);
  auto cube = [&](Graph<double>& g) { return ops::sum(g, ops::mul(g, ops::mul(g, x, x), x)); };
  const auto central = grad_check(cube, {{"x", x}}, 1e-2, 1e-6);
  const auto rich = grad_check(cube, {{"x", x}}, 1e-2, 1e-6, FiniteDifference::kRichardson);
  EXPECT_GT(central.max_rel_error, 1e-6);
  EXPECT_LT(rich.max_rel_error, 1e-10);
}

TEST(GradCheck, ConstantFunctionPasses) {
  D w = D::from({2}, {1, 2}, true);
  const auto report = grad_check([&](Graph<double>&) { return D::from({1}, {3.0}); }, {{"w", w}});
  EXPECT_TRUE(report.passed);
  EXPECT_LT(report.max_rel_error, 1e-5);
}

TEST(GradCheck, ReportsAWrongGradient) {
  // A deliberately broken op: forward x^2, backward claims 3x.
  D x = D::from({2}, {0.7, -1.3}, true);
  auto broken = [&](Graph<double>& g) {
    D out = D::zeros({1}, g.tracks({&x}));
    out[0] = x[0] * x[0] + x[1] * x[1];
    if (out.requires_grad()) {
      g.record([x, out]() mutable {
        auto gx = x.grad_buffer();
        for (std::size_t i = 0; i < 2; ++i) gx[i] += out.grad()[0] * 3 * x[i];
      });
    }
    return out;
  };
  const auto report = grad_check(broken, {{"x", x}});
  EXPECT_FALSE(report.passed);
  EXPECT_GT(report.max_rel_error, 0.1);
}

TEST(Determinism, SameSeedSameValues) {
  auto run = [] {
    Rng rng(99);
    Tensor<float> a = Tensor<float>::zeros({8, 8});
    for (float& v : a.data()) v = static_cast<float>(rng.uniform(-1, 1));
    Graph<float> g(false);
    return ops::tanh(g, ops::matmul(g, a, a));
  };
  const auto x = run(), y = run();
  EXPECT_TRUE(std::equal(x.data().begin(), x.data().end(), y.data().begin()));
}

}  // namespace
}  // namespace polyseg
