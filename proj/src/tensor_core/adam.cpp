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

#include "dmf/adam.hpp"

#include <cmath>

namespace dmf {

template <typename T>
void adam_step(std::span<Tensor<T>* const> params, AdamState<T>& state) {
  if (state.m.empty() && state.step == 0) {
    for (Tensor<T>* p : params) {
      state.m.emplace_back(p->size(), T(0));
      state.v.emplace_back(p->size(), T(0));
    }
  }
  if (state.m.size() != params.size()) {
    throw DimensionError("adam_step: state tracks " + std::to_string(state.m.size()) + " parameters, got " +
                         std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i]->size()) {
      throw DimensionError("adam_step: parameter " + std::to_string(i) + " has shape " +
                           shape_to_string(params[i]->shape()) + " but its moments hold " +
                           std::to_string(state.m[i].size()) + " elements");
    }
  }
  state.step += 1;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = *params[i];
    std::span<const T> g = p.grad();
    std::vector<T>& m = state.m[i];
    std::vector<T>& v = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (T(1) - b1) * g[k];
      v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
      const double m_hat = static_cast<double>(m[k]) / correct1;
      const double v_hat = static_cast<double>(v[k]) / correct2;
      p[k] -= static_cast<T>(c.alpha * m_hat / (std::sqrt(v_hat) + c.epsilon));
    }
  }
}

template <typename T>
double clip_grad_norm(std::span<Tensor<T>* const> params, double max_norm) {
  double sq = 0;
  for (Tensor<T>* p : params) {
    for (T g : static_cast<const Tensor<T>&>(*p).grad()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const T f = static_cast<T>(max_norm / norm);
    for (Tensor<T>* p : params) {
      if (!p->has_grad()) continue;
      for (T& g : p->grad()) g *= f;
    }
  }
  return norm;
}

template void adam_step(std::span<Tensor<float>* const>, AdamState<float>&);
template void adam_step(std::span<Tensor<double>* const>, AdamState<double>&);
template double clip_grad_norm(std::span<Tensor<float>* const>, double);
template double clip_grad_norm(std::span<Tensor<double>* const>, double);

}  // namespace dmf
