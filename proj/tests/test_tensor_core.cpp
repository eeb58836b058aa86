// Copyright 2026 The DMF Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "dmf/adam.hpp"
#include "dmf/binary_io.hpp"
#include "dmf/checkpoint.hpp"
#include "dmf/ops.hpp"
#include "dmf/params.hpp"
#include "test_util.hpp"

namespace dmf {
namespace {

using testing::random_tensor;

Tensor<double> mat(std::size_t r, std::size_t c, std::vector<double> v) { return Tensor<double>({r, c}, std::move(v)); }

TEST(Tensor, ShapeAndGradientSlot) {
  Tensor<float> t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_FALSE(t.has_grad());
  EXPECT_EQ(t.grad().size(), 6u);
  EXPECT_THROW(Tensor<float>({2, 0}), DimensionError);
  EXPECT_THROW(Tensor<float>({2, 2}, std::vector<float>(3)), DimensionError);
  EXPECT_THROW(t.reshape({4, 2}), DimensionError);
  t.reshape({3, 2});
  EXPECT_EQ(t.shape(), (Shape{3, 2}));
  t[0] = std::nanf("");
  EXPECT_FALSE(t.all_finite());
}

TEST(Matmul, IdentityAndSelector) {
  Graph<double> g;
  auto y = matmul(g.constant(mat(2, 2, {1, 0, 0, 1})), g.constant(mat(2, 2, {1, 2, 3, 4})));
  EXPECT_EQ(testing::to_vec(y.value()), (std::vector<double>{1, 2, 3, 4}));
  auto s = matmul(g.constant(mat(2, 2, {1, 0, 0, 0})), g.constant(mat(2, 1, {5, 7})));
  EXPECT_EQ(testing::to_vec(s.value()), (std::vector<double>{5, 0}));
}

TEST(Matmul, MismatchNamesBothShapes) {
  Graph<double> g;
  try {
    matmul(g.constant(Tensor<double>({2, 3})), g.constant(Tensor<double>({4, 2})));
    FAIL() << "expected a dimension error";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4x2]"), std::string::npos) << msg;
  }
}

TEST(Matmul, GradientOfSumMatchesCentralDifferences) {
  Rng rng(11);
  const auto a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
  Graph<double> g;
  auto va = g.leaf(a), vb = g.leaf(b);
  g.backward(sum(matmul(va, vb)));
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto f = [&](double d) {
      Tensor<double> p = a;
      p[i] += d;
      Graph<double> h;
      return sum(matmul(h.constant(p), h.constant(b))).value()[0];
    };
    const double numeric = (f(1e-5) - f(-1e-5)) / 2e-5;
    EXPECT_LT(testing::rel_error(va.grad()[i], numeric), 1e-4);
  }
}

TEST(Conv2d, AllOnesSumsTheWindow) {
  Graph<double> g;
  auto y = conv2d(g.constant(Tensor<double>({1, 3, 3}, std::vector<double>(9, 1.0))),
                  g.constant(Tensor<double>({1, 1, 3, 3}, std::vector<double>(9, 1.0))), 1, 0);
  EXPECT_EQ(y.value().shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(y.value()[0], 9.0);
}

TEST(Conv2d, ZeroKernelGivesZeros) {
  Rng rng(2);
  Graph<double> g;
  auto y = conv2d(g.constant(random_tensor({2, 5, 6}, rng)), g.constant(Tensor<double>({3, 2, 3, 3})), 1, 1);
  for (double v : y.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2d, StrideTwoShapeGradientsAndLoopOracle) {
  Rng rng(5);
  const auto img = random_tensor({3, 8, 8}, rng), ker = random_tensor({4, 3, 3, 3}, rng);
  Graph<double> g;
  auto y = conv2d(g.constant(img), g.constant(ker), 2, 1);
  EXPECT_EQ(y.value().shape(), (Shape{4, 4, 4}));
  std::size_t oh = 0, ow = 0;
  const auto ref = testing::conv_ref(testing::to_vec(img), 3, 8, 8, testing::to_vec(ker), {}, 4, 3, 2, 1, &oh, &ow);
  ASSERT_EQ(ref.size(), y.size());
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(ref[i], y.value()[i], 1e-12);
  const double err = testing::gradient_check(
      {img, ker}, [](Graph<double>&, const std::vector<Var<double>>& v) { return conv2d(v[0], v[1], 2, 1); }, rng);
  EXPECT_LT(err, 1e-4);
}

TEST(Conv2d, NonPositiveOutputIsAnError) {
  Graph<double> g;
  EXPECT_THROW(conv2d(g.constant(Tensor<double>({1, 2, 2})), g.constant(Tensor<double>({1, 1, 3, 3})), 1, 0),
               DimensionError);
  EXPECT_THROW(conv2d(g.constant(Tensor<double>({2, 4, 4})), g.constant(Tensor<double>({1, 1, 3, 3})), 1, 0),
               DimensionError);
}

GruVars<double> gru_vars(Graph<double>& g, const Tensor<double>& wi, const Tensor<double>& wh,
                         const Tensor<double>& b) {
  return {g.constant(wi), g.constant(wh), g.constant(b)};
}

TEST(GruCell, ZeroParametersHalveTheState) {
  Graph<double> g;
  auto w = gru_vars(g, Tensor<double>({6, 3}), Tensor<double>({6, 2}), Tensor<double>({6}));
  auto h = gru_cell(g.constant(mat(1, 3, {0.3, -2, 1})), g.constant(mat(1, 2, {0.8, -0.4})), w);
  EXPECT_DOUBLE_EQ(h.value()[0], 0.4);
  EXPECT_DOUBLE_EQ(h.value()[1], -0.2);
  auto h0 = gru_cell(g.constant(mat(1, 3, {0.3, -2, 1})), g.constant(mat(1, 2, {0, 0})), w);
  EXPECT_EQ(h0.value()[0], 0.0);
  EXPECT_EQ(h0.value()[1], 0.0);
}

TEST(GruCell, MatchesScalarLoopAndFiniteDifferences) {
  Rng rng(9);
  const std::size_t D = 4, H = 3;
  const auto x = random_tensor({1, D}, rng), h = random_tensor({1, H}, rng);
  const auto wi = random_tensor({3 * H, D}, rng), wh = random_tensor({3 * H, H}, rng), b = random_tensor({3 * H}, rng);
  Graph<double> g;
  auto out = gru_cell(g.constant(x), g.constant(h), gru_vars(g, wi, wh, b));
  const auto ref = testing::gru_ref(testing::to_vec(x), testing::to_vec(h), testing::to_vec(wi), testing::to_vec(wh),
                                    testing::to_vec(b));
  for (std::size_t i = 0; i < H; ++i) EXPECT_NEAR(out.value()[i], ref[i], 1e-12);
  const double err = testing::gradient_check(
      {x, h, wi, wh, b},
      [](Graph<double>&, const std::vector<Var<double>>& v) { return gru_cell(v[0], v[1], {v[2], v[3], v[4]}); },
      rng);
  EXPECT_LT(err, 1e-4);
}

TEST(GruCell, OutputLiesBetweenPreviousStateAndCandidate) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t D = 3, H = 4;
    const auto x = random_tensor({1, D}, rng, -2, 2), h = random_tensor({1, H}, rng);
    const auto wi = random_tensor({3 * H, D}, rng), wh = random_tensor({3 * H, H}, rng), b = random_tensor({3 * H}, rng);
    Graph<double> g;
    auto out = gru_cell(g.constant(x), g.constant(h), gru_vars(g, wi, wh, b));
    const auto ref = testing::gru_ref(testing::to_vec(x), testing::to_vec(h), testing::to_vec(wi),
                                      testing::to_vec(wh), testing::to_vec(b));
    // With z in (0, 1), each component sits between h and the candidate; the
    // candidate is in (-1, 1), so the output lies in the hull of h and that interval.
    for (std::size_t i = 0; i < H; ++i) {
      const double lo = std::min(h[i], -1.0), hi = std::max(h[i], 1.0);
      EXPECT_GE(out.value()[i], lo);
      EXPECT_LE(out.value()[i], hi);
      EXPECT_NEAR(out.value()[i], ref[i], 1e-12);
    }
  }
}

TEST(Softmax, ClosedFormsAndStability) {
  Graph<double> g;
  auto u = softmax(g.constant(Tensor<double>({4}, {0, 0, 0, 0})));
  for (double v : u.value().data()) EXPECT_DOUBLE_EQ(v, 0.25);
  auto p = softmax(g.constant(Tensor<double>({2}, {std::log(3.0), 0})));
  EXPECT_NEAR(p.value()[0], 0.75, 1e-15);
  EXPECT_NEAR(p.value()[1], 0.25, 1e-15);
  auto big = softmax(g.constant(Tensor<double>({2}, {1000, 0})));
  EXPECT_TRUE(big.value().all_finite());
  EXPECT_NEAR(big.value()[0], 1.0, 1e-15);
  EXPECT_NEAR(big.value()[1], 0.0, 1e-15);
}

TEST(Softmax, SumsToOneAndIsPermutationEquivariant) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(9);
    auto x = random_tensor({n}, rng, -20, 20);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(std::span<std::size_t>(perm));
    Tensor<double> xp({n});
    for (std::size_t i = 0; i < n; ++i) xp[i] = x[perm[i]];
    Graph<double> g;
    auto s = softmax(g.constant(x)), sp = softmax(g.constant(xp));
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      total += s.value()[i];
      EXPECT_GT(s.value()[i], 0.0);
      EXPECT_DOUBLE_EQ(sp.value()[i], s.value()[perm[i]]);
    }
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(Backward, SumAndSquare) {
  Graph<double> g;
  auto x = g.leaf(Tensor<double>({3}, {1, 2, 3}));
  g.backward(sum(x));
  EXPECT_EQ(testing::to_vec(x.grad()), (std::vector<double>{1, 1, 1}));
  Graph<double> h;
  auto y = h.leaf(Tensor<double>({3}, {1, 2, 3}));
  h.backward(sum(mul(y, y)));
  EXPECT_EQ(testing::to_vec(y.grad()), (std::vector<double>{2, 4, 6}));
}

TEST(Backward, NonScalarLossIsRejected) {
  Graph<double> g;
  auto x = g.leaf(Tensor<double>({3}, {1, 2, 3}));
  EXPECT_THROW(g.backward(x), DimensionError);
}

TEST(Backward, UnusedParametersGetZeroGradients) {
  Tensor<double> used({2}, {1, 2}), unused({3}, {4, 5, 6});
  used.set_requires_grad(true);
  unused.set_requires_grad(true);
  Graph<double> g;
  auto u = g.parameter(used);
  g.parameter(unused);
  g.backward(sum(u));
  ASSERT_TRUE(unused.has_grad());
  for (double v : unused.grad()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(testing::to_vec(used.grad()), (std::vector<double>{1, 1}));
}

TEST(Backward, FrozenParametersCollectNothing) {
  Tensor<double> w({2}, {1, 2});
  w.set_requires_grad(true);
  Graph<double> g;
  auto v = g.frozen(w);
  auto x = g.leaf(Tensor<double>({2}, {3, 4}));
  g.backward(sum(mul(v, x)));
  EXPECT_FALSE(w.has_grad());
  EXPECT_EQ(testing::to_vec(x.grad()), (std::vector<double>{1, 2}));
}

TEST(Adam, FirstStepFromZero) {
  Tensor<double> p = Tensor<double>::scalar(0.0);
  p.grad()[0] = 1.0;
  AdamState<double> s;
  Tensor<double>* ps[] = {&p};
  adam_step<double>(ps, s);
  EXPECT_EQ(s.step, 1u);
  EXPECT_NEAR(p[0], -0.0003 / (1 + 1e-8), 1e-18);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Tensor<double> p({3}, {0.5, -1, 2});
  p.zero_grad();
  AdamState<double> s;
  Tensor<double>* ps[] = {&p};
  adam_step<double>(ps, s);
  EXPECT_EQ(testing::to_vec(p), (std::vector<double>{0.5, -1, 2}));
  for (double v : s.v[0]) EXPECT_GE(v, 0.0);
}

TEST(Adam, TwoUnitGradientStepsBothDecrease) {
  Tensor<double> p = Tensor<double>::scalar(0.0);
  AdamState<double> s;
  Tensor<double>* ps[] = {&p};
  double prev = p[0];
  for (int t = 1; t <= 2; ++t) {
    p.grad()[0] = 1.0;
    adam_step<double>(ps, s);
    EXPECT_LT(p[0], prev);
    prev = p[0];
  }
  // m_hat = v_hat = 1 on both steps, so each moves by alpha / (1 + eps).
  EXPECT_NEAR(p[0], -2 * 0.0003 / (1 + 1e-8), 1e-15);
}

TEST(Adam, ShapeChangeIsAnError) {
  Tensor<double> p({2});
  p.grad();
  AdamState<double> s;
  Tensor<double>* ps[] = {&p};
  adam_step<double>(ps, s);
  Tensor<double> q({3});
  q.grad();
  Tensor<double>* qs[] = {&q};
  EXPECT_THROW(adam_step<double>(qs, s), DimensionError);
}

TEST(Init, ZerosDeterminismAndGlorotBound) {
  Rng a(1), b(1);
  const auto z = init_params<double>({4, 5}, InitScheme::kZeros, a);
  for (double v : z.data()) EXPECT_EQ(v, 0.0);
  Rng c(42), d(42);
  EXPECT_EQ(init_params<float>({30, 20}, InitScheme::kGlorotUniform, c),
            init_params<float>({30, 20}, InitScheme::kGlorotUniform, d));
  Rng e(3);
  const auto w = init_params<double>({300, 300}, InitScheme::kGlorotUniform, e);
  double mx = 0;
  for (double v : w.data()) mx = std::max(mx, std::abs(v));
  EXPECT_LE(mx, std::sqrt(6.0 / 600.0));
  EXPECT_GT(mx, 0.09);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  // Pinned first outputs guard the stream across platforms.
  Rng c(0);
  EXPECT_EQ(c.next_u64(), 0xe220a8397b1dcdafULL);
}

TEST(Checkpoint, BitExactRoundTripAndRejections) {
  Checkpoint ck;
  ck.kind = 3;
  ck.tensors.push_back({"a.weight", Tensor<float>({2, 3}, {1, -2, 3.5f, 1e-30f, -0.0f, 7})});
  ck.tensors.push_back({"b", Tensor<float>::scalar(42)});
  const std::string bytes = encode_checkpoint(ck);
  EXPECT_EQ(bytes.substr(0, 4), "DMF1");
  const Checkpoint back = decode_checkpoint(bytes);
  EXPECT_EQ(back, ck);
  EXPECT_EQ(encode_checkpoint(back), bytes);

  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 1)), FormatError);
  EXPECT_THROW(decode_checkpoint(bytes + "x"), FormatError);

  const auto dir = testing::scratch_dir("checkpoint");
  save_checkpoint((dir / "c.dmf").string(), ck);
  EXPECT_EQ(binary::read_file((dir / "c.dmf").string()), bytes);
  EXPECT_EQ(load_checkpoint((dir / "c.dmf").string()), ck);
}

TEST(Checkpoint, RestoreChecksNamesAndShapes) {
  ParamStore<float> store;
  store.add("w", Tensor<float>({2, 2}, {1, 2, 3, 4}));
  Checkpoint ck = to_checkpoint(store, 0);
  ParamStore<float> other;
  other.add("w", Tensor<float>({2, 2}));
  restore_params(ck, other);
  EXPECT_EQ(other.get("w"), store.get("w"));
  ParamStore<float> wrong;
  wrong.add("w", Tensor<float>({4}));
  EXPECT_THROW(restore_params(ck, wrong), FormatError);
  ParamStore<float> renamed;
  renamed.add("v", Tensor<float>({2, 2}));
  EXPECT_THROW(restore_params(ck, renamed), FormatError);
}

}  // namespace
}  // namespace dmf
