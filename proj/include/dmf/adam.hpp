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

#include <cstdint>
#include <span>
#include <vector>

#include "dmf/tensor.hpp"

namespace dmf {

struct AdamConfig {
  double alpha = 0.0003;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment buffers for a fixed, ordered parameter list.
template <typename T>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

// Increments the step count, then applies
//   theta -= alpha * m_hat / (sqrt(v_hat) + epsilon)
// with bias-corrected moments, reading each parameter's grad slot. Moment
// buffers are created on the first call; later calls must pass parameters
// of the same sizes in the same order.
template <typename T>
void adam_step(std::span<Tensor<T>* const> params, AdamState<T>& state);

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(std::span<Tensor<T>* const> params, double max_norm);

}  // namespace dmf
