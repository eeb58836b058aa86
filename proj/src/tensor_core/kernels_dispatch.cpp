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

#include <atomic>
#include <cstdlib>
#include <string>

#include "dmf/kernels.hpp"

namespace dmf::kernels {

#if DMF_HAVE_AVX2_KERNELS
template <typename T>
const KernelTable<T>* avx2_table_impl();
#endif

bool cpu_has_avx2() {
#if DMF_HAVE_AVX2_KERNELS && (defined(__GNUC__) || defined(__clang__))
  static const bool has = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return has;
#else
  return false;
#endif
}

template <typename T>
const KernelTable<T>* avx2_table() {
#if DMF_HAVE_AVX2_KERNELS
  if (cpu_has_avx2()) return avx2_table_impl<T>();
#endif
  return nullptr;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

namespace {

Isa initial_isa() {
  const char* env = std::getenv("DMF_KERNELS");
  const std::string want = env ? env : "";
  if (want == "scalar") return Isa::kScalar;
  return cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Isa active_isa() { return current().load(std::memory_order_relaxed); }

bool set_active_isa(Isa isa) {
  if (isa == Isa::kAvx2 && !cpu_has_avx2()) return false;
  current().store(isa, std::memory_order_relaxed);
  return true;
}

template <typename T>
const KernelTable<T>& active() {
  if (active_isa() == Isa::kAvx2) {
    if (const auto* t = avx2_table<T>()) return *t;
  }
  return scalar_table<T>();
}

template const KernelTable<float>* avx2_table<float>();
template const KernelTable<double>* avx2_table<double>();
template const KernelTable<float>& active<float>();
template const KernelTable<double>& active<double>();

}  // namespace dmf::kernels
