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

// AVX2 + FMA kernels. This translation unit alone is compiled with
// -mavx2 -mfma; nothing here runs unless cpu_has_avx2() said yes.

#include <immintrin.h>

#include "dmf/kernels.hpp"

namespace dmf::kernels {

namespace {

// Lane-width traits so one set of loops serves float and double.
template <typename T>
struct Vec;

template <>
struct Vec<float> {
  using Reg = __m256;
  static constexpr std::size_t kLanes = 8;
  static Reg zero() { return _mm256_setzero_ps(); }
  static Reg load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, Reg v) { _mm256_storeu_ps(p, v); }
  static Reg set1(float v) { return _mm256_set1_ps(v); }
  static Reg fma(Reg a, Reg b, Reg c) { return _mm256_fmadd_ps(a, b, c); }
  static Reg add(Reg a, Reg b) { return _mm256_add_ps(a, b); }
  static float hsum(Reg v) {
    const __m128 lo = _mm256_castps256_ps128(v);
    const __m128 hi = _mm256_extractf128_ps(v, 1);
    __m128 s = _mm_add_ps(lo, hi);
    s = _mm_add_ps(s, _mm_movehl_ps(s, s));
    s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 0x1));
    return _mm_cvtss_f32(s);
  }
};

template <>
struct Vec<double> {
  using Reg = __m256d;
  static constexpr std::size_t kLanes = 4;
  static Reg zero() { return _mm256_setzero_pd(); }
  static Reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, Reg v) { _mm256_storeu_pd(p, v); }
  static Reg set1(double v) { return _mm256_set1_pd(v); }
  static Reg fma(Reg a, Reg b, Reg c) { return _mm256_fmadd_pd(a, b, c); }
  static Reg add(Reg a, Reg b) { return _mm256_add_pd(a, b); }
  static double hsum(Reg v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
  }
};

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  using V = Vec<T>;
  constexpr std::size_t L = V::kLanes;
  auto acc0 = V::zero(), acc1 = V::zero(), acc2 = V::zero(), acc3 = V::zero();
  std::size_t i = 0;
  for (; i + 4 * L <= n; i += 4 * L) {
    acc0 = V::fma(V::load(a + i), V::load(b + i), acc0);
    acc1 = V::fma(V::load(a + i + L), V::load(b + i + L), acc1);
    acc2 = V::fma(V::load(a + i + 2 * L), V::load(b + i + 2 * L), acc2);
    acc3 = V::fma(V::load(a + i + 3 * L), V::load(b + i + 3 * L), acc3);
  }
  for (; i + L <= n; i += L) acc0 = V::fma(V::load(a + i), V::load(b + i), acc0);
  T acc = V::hsum(V::add(V::add(acc0, acc1), V::add(acc2, acc3)));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  using V = Vec<T>;
  constexpr std::size_t L = V::kLanes;
  const auto s = V::set1(alpha);
  std::size_t i = 0;
  for (; i + 2 * L <= n; i += 2 * L) {
    V::store(y + i, V::fma(s, V::load(x + i), V::load(y + i)));
    V::store(y + i + L, V::fma(s, V::load(x + i + L), V::load(y + i + L)));
  }
  for (; i + L <= n; i += L) V::store(y + i, V::fma(s, V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Four output columns per pass share each load of the A row.
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a,
             const T* b, T* c, bool accumulate) {
  using V = Vec<T>;
  constexpr std::size_t L = V::kLanes;
  for (std::size_t i = 0; i < m; ++i) {
    const T* ar = a + i * k;
    T* cr = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const T* b0 = b + j * k;
      const T* b1 = b0 + k;
      const T* b2 = b1 + k;
      const T* b3 = b2 + k;
      auto s0 = V::zero(), s1 = V::zero(), s2 = V::zero(), s3 = V::zero();
      std::size_t p = 0;
      for (; p + L <= k; p += L) {
        const auto av = V::load(ar + p);
        s0 = V::fma(av, V::load(b0 + p), s0);
        s1 = V::fma(av, V::load(b1 + p), s1);
        s2 = V::fma(av, V::load(b2 + p), s2);
        s3 = V::fma(av, V::load(b3 + p), s3);
      }
      T r0 = V::hsum(s0), r1 = V::hsum(s1), r2 = V::hsum(s2), r3 = V::hsum(s3);
      for (; p < k; ++p) {
        r0 += ar[p] * b0[p];
        r1 += ar[p] * b1[p];
        r2 += ar[p] * b2[p];
        r3 += ar[p] * b3[p];
      }
      if (accumulate) {
        cr[j] += r0;
        cr[j + 1] += r1;
        cr[j + 2] += r2;
        cr[j + 3] += r3;
      } else {
        cr[j] = r0;
        cr[j + 1] = r1;
        cr[j + 2] = r2;
        cr[j + 3] = r3;
      }
    }
    for (; j < n; ++j) {
      const T v = dot(ar, b + j * k, k);
      cr[j] = accumulate ? cr[j] + v : v;
    }
  }
}

template <typename T>
void gemm_nn_acc(std::size_t m, std::size_t n, std::size_t k, const T* a,
                 const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const T s = a[i * k + p];
      if (s != T(0)) axpy(s, b + p * n, c + i * n, n);
    }
  }
}

template <typename T>
void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, const T* a,
                 const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const T s = a[i * k + p];
      if (s != T(0)) axpy(s, b + i * n, c + p * n, n);
    }
  }
}

template <typename T>
constexpr KernelTable<T> kTable = {Isa::kAvx2,  &dot<T>,         &axpy<T>,
                                   &gemm_nt<T>, &gemm_nn_acc<T>, &gemm_tn_acc<T>};

}  // namespace

template <typename T>
const KernelTable<T>* avx2_table_impl() {
  return &kTable<T>;
}

template const KernelTable<float>* avx2_table_impl<float>();
template const KernelTable<double>* avx2_table_impl<double>();

}  // namespace dmf::kernels
