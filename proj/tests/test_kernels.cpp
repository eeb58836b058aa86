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

#include <vector>

#include "dmf/kernels.hpp"
#include "dmf/ops.hpp"
#include "dmf/rng.hpp"
#include "test_util.hpp"

namespace dmf {
namespace {

using kernels::Isa;
using kernels::KernelTable;

template <typename T>
std::vector<T> random_vec(std::size_t n, Rng& rng) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-1, 1));
  return v;
}

template <typename T>
void expect_close(const std::vector<T>& a, const std::vector<T>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol * (1 + std::abs(a[i]))) << i;
}

template <typename T>
class KernelEquivalence : public ::testing::Test {};
using Widths = ::testing::Types<float, double>;
TYPED_TEST_SUITE(KernelEquivalence, Widths);

TYPED_TEST(KernelEquivalence, SimdMatchesScalarOnOddSizes) {
  using T = TypeParam;
  const KernelTable<T>* simd = kernels::avx2_table<T>();
  if (!simd) GTEST_SKIP() << "no AVX2 kernels on this machine";
  const KernelTable<T>& ref = kernels::scalar_table<T>();
  const double tol = sizeof(T) == 4 ? 1e-5 : 1e-12;
  Rng rng(7);
  for (std::size_t m : {1, 3, 8, 17}) {
    for (std::size_t n : {1, 2, 5, 9, 33}) {
      for (std::size_t k : {1, 4, 7, 16, 67}) {
        const auto a = random_vec<T>(m * k, rng), b = random_vec<T>(n * k, rng), bkn = random_vec<T>(k * n, rng);
        const auto amn = random_vec<T>(m * n, rng);
        const auto seed = random_vec<T>(m * n, rng);
        for (bool acc : {false, true}) {
          auto c1 = seed, c2 = seed;
          ref.gemm_nt(m, n, k, a.data(), b.data(), c1.data(), acc);
          simd->gemm_nt(m, n, k, a.data(), b.data(), c2.data(), acc);
          expect_close(c1, c2, tol);
        }
        {
          auto c1 = seed, c2 = seed;
          ref.gemm_nn_acc(m, n, k, a.data(), bkn.data(), c1.data());
          simd->gemm_nn_acc(m, n, k, a.data(), bkn.data(), c2.data());
          expect_close(c1, c2, tol);
        }
        {
          const auto ckn = random_vec<T>(k * n, rng);
          auto c1 = ckn, c2 = ckn;
          ref.gemm_tn_acc(m, n, k, a.data(), amn.data(), c1.data());
          simd->gemm_tn_acc(m, n, k, a.data(), amn.data(), c2.data());
          expect_close(c1, c2, tol);
        }
      }
    }
  }
  for (std::size_t n : {0, 1, 3, 8, 15, 16, 31, 100}) {
    const auto x = random_vec<T>(n, rng), y = random_vec<T>(n, rng);
    EXPECT_NEAR(ref.dot(x.data(), y.data(), n), simd->dot(x.data(), y.data(), n), tol * (1 + n));
    auto y1 = y, y2 = y;
    ref.axpy(T(0.7), x.data(), y1.data(), n);
    simd->axpy(T(0.7), x.data(), y2.data(), n);
    expect_close(y1, y2, tol);
  }
}

TEST(KernelDispatch, ScalarCanBeForcedAndRestored) {
  const Isa before = kernels::active_isa();
  ASSERT_TRUE(kernels::set_active_isa(Isa::kScalar));
  EXPECT_EQ(kernels::active_isa(), Isa::kScalar);
  EXPECT_EQ(kernels::active<float>().isa, Isa::kScalar);
  EXPECT_EQ(kernels::active<double>().isa, Isa::kScalar);
  if (kernels::avx2_table<float>()) {
    EXPECT_TRUE(kernels::set_active_isa(Isa::kAvx2));
    EXPECT_EQ(kernels::active<float>().isa, Isa::kAvx2);
  } else {
    EXPECT_FALSE(kernels::set_active_isa(Isa::kAvx2));
  }
  kernels::set_active_isa(before);
  EXPECT_EQ(kernels::isa_name(Isa::kScalar), "scalar");
}

TEST(KernelDispatch, OpsAgreeAcrossTables) {
  if (!kernels::avx2_table<double>()) GTEST_SKIP() << "no AVX2 kernels on this machine";
  const Isa before = kernels::active_isa();
  Rng rng(3);
  const auto a = testing::random_tensor({5, 13}, rng), w = testing::random_tensor({7, 13}, rng);
  const auto img = testing::random_tensor({2, 3, 9, 7}, rng), ker = testing::random_tensor({4, 3, 3, 3}, rng);
  std::vector<std::vector<double>> results[2];
  int slot = 0;
  for (Isa isa : {Isa::kScalar, Isa::kAvx2}) {
    kernels::set_active_isa(isa);
    Graph<double> g;
    auto va = g.leaf(a), vw = g.leaf(w), vi = g.leaf(img), vk = g.leaf(ker);
    auto y = linear(va, vw);
    auto c = conv2d(vi, vk, 2, 1);
    g.backward(add(sum(mul(y, y)), sum(mul(c, c))));
    results[slot] = {testing::to_vec(y.value()), testing::to_vec(c.value()), testing::to_vec(va.grad()),
                     testing::to_vec(vw.grad()), testing::to_vec(vi.grad()), testing::to_vec(vk.grad())};
    ++slot;
  }
  kernels::set_active_isa(before);
  for (std::size_t i = 0; i < results[0].size(); ++i) expect_close(results[0][i], results[1][i], 1e-12);
}

}  // namespace
}  // namespace dmf
