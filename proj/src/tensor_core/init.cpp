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

#include <cmath>

#include "dmf/params.hpp"

namespace dmf {

template <typename T>
Tensor<T> init_params(const Shape& shape, InitScheme scheme, Rng& rng) {
  Tensor<T> out(shape, true);
  if (scheme == InitScheme::kZeros) return out;
  double fan_in = 0, fan_out = 0;
  if (shape.size() == 1) {
    fan_in = fan_out = static_cast<double>(shape[0]);
  } else {
    double receptive = 1;
    for (std::size_t i = 2; i < shape.size(); ++i) receptive *= static_cast<double>(shape[i]);
    fan_in = static_cast<double>(shape[1]) * receptive;
    fan_out = static_cast<double>(shape[0]) * receptive;
  }
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (T& v : out.data()) v = static_cast<T>(rng.uniform(-a, a));
  return out;
}

template <typename T>
Tensor<T>& ParamStore<T>::add(std::string name, Tensor<T> value) {
  if (contains(name)) throw Error("ParamStore: duplicate parameter " + name);
  value.set_requires_grad(true);
  entries_.push_back({std::move(name), std::make_unique<Tensor<T>>(std::move(value))});
  return *entries_.back().tensor;
}

template <typename T>
bool ParamStore<T>::contains(const std::string& name) const {
  for (const Entry& e : entries_)
    if (e.name == name) return true;
  return false;
}

template <typename T>
Tensor<T>& ParamStore<T>::get(const std::string& name) {
  for (Entry& e : entries_)
    if (e.name == name) return *e.tensor;
  throw Error("ParamStore: no parameter named " + name);
}

template <typename T>
const Tensor<T>& ParamStore<T>::get(const std::string& name) const {
  for (const Entry& e : entries_)
    if (e.name == name) return *e.tensor;
  throw Error("ParamStore: no parameter named " + name);
}

template <typename T>
std::vector<Tensor<T>*> ParamStore<T>::tensors() const {
  std::vector<Tensor<T>*> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) out.push_back(e.tensor.get());
  return out;
}

template <typename T>
std::size_t ParamStore<T>::num_scalars() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) n += e.tensor->size();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (Entry& e : entries_) e.tensor->zero_grad();
}

template Tensor<float> init_params(const Shape&, InitScheme, Rng&);
template Tensor<double> init_params(const Shape&, InitScheme, Rng&);
template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace dmf
