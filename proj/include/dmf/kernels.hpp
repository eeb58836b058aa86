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

#pragma once

#include <cstddef>
#include <string_view>

namespace dmf::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

// Dense linear-algebra inner loops. Matrices are row-major and contiguous.
// Every table entry has a scalar reference version; SIMD tables must agree
// with it up to floating-point reassociation.
template <typename T>
struct KernelTable {
  Isa isa;
  T (*dot)(const T* a, const T* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(T alpha, const T* x, T* y, std::size_t n);
  // C[m x n] = A[m x k] * B[n x k]^T, or += when accumulate is set.
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const T* a,
                  const T* b, T* c, bool accumulate);
  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn_acc)(std::size_t m, std::size_t n, std::size_t k, const T* a,
                      const T* b, T* c);
  // C[k x n] += A[m x k]^T * B[m x n]
  void (*gemm_tn_acc)(std::size_t m, std::size_t n, std::size_t k, const T* a,
                      const T* b, T* c);
};

template <typename T>
const KernelTable<T>& scalar_table();

// nullptr when the binary was built without the variant or the CPU lacks it.
template <typename T>
const KernelTable<T>* avx2_table();

bool cpu_has_avx2();

// The table used by every tensor op. Chosen once from the CPU features,
// overridable by DMF_KERNELS=scalar|avx2 in the environment.
template <typename T>
const KernelTable<T>& active();

Isa active_isa();
// Returns false (and changes nothing) when the ISA is unavailable.
bool set_active_isa(Isa isa);

}  // namespace dmf::kernels
