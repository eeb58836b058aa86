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

#include <memory>
#include <string>
#include <vector>

#include "dmf/rng.hpp"
#include "dmf/tensor.hpp"

namespace dmf {

enum class InitScheme { kGlorotUniform, kZeros };

// Glorot uniform draws U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
// Fans: [out x in] -> (in, out); [O x C x kH x kW] -> (C*kH*kW, O*kH*kW);
// rank 1 -> (n, n).
template <typename T>
Tensor<T> init_params(const Shape& shape, InitScheme scheme, Rng& rng);

/// Named, insertion-ordered set of trainable tensors with stable addresses.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    std::unique_ptr<Tensor<T>> tensor;
  };

  Tensor<T>& add(std::string name, Tensor<T> value);
  bool contains(const std::string& name) const;
  Tensor<T>& get(const std::string& name);
  const Tensor<T>& get(const std::string& name) const;

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Tensor<T>*> tensors() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t num_scalars() const;
  void zero_grad();

 private:
  std::vector<Entry> entries_;
};

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace dmf
