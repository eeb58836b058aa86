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

#include "dmf/kernels.hpp"

namespace dmf::kernels {

namespace {

// Reference kernels: straight loops, strict left-to-right accumulation.

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a,
             const T* b, T* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const T v = dot(a + i * k, b + j * k, k);
      c[i * n + j] = accumulate ? c[i * n + j] + v : v;
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
constexpr KernelTable<T> kTable = {Isa::kScalar, &dot<T>,         &axpy<T>,
                                   &gemm_nt<T>,  &gemm_nn_acc<T>, &gemm_tn_acc<T>};

}  // namespace

template <typename T>
const KernelTable<T>& scalar_table() {
  return kTable<T>;
}

template const KernelTable<float>& scalar_table<float>();
template const KernelTable<double>& scalar_table<double>();

}  // namespace dmf::kernels
