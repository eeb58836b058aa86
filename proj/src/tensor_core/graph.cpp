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

#include "dmf/graph.hpp"

namespace dmf {

template <typename T>
Var<T> Graph<T>::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var<T>(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

template <typename T>
Var<T> Graph<T>::constant(Tensor<T> value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

template <typename T>
Var<T> Graph<T>::leaf(Tensor<T> value, bool requires_grad) {
  Node n;
  n.owned = std::move(value);
  n.owned.set_requires_grad(requires_grad);
  n.needs_grad = requires_grad;
  return push(std::move(n));
}

template <typename T>
Var<T> Graph<T>::parameter(Tensor<T>& param) {
  Node n;
  n.param = &param;
  n.needs_grad = param.requires_grad();
  return push(std::move(n));
}

template <typename T>
Var<T> Graph<T>::frozen(const Tensor<T>& param) {
  Node n;
  // Only read through value(); backward skips nodes without needs_grad.
  n.param = const_cast<Tensor<T>*>(&param);
  return push(std::move(n));
}

template <typename T>
Var<T> Graph<T>::record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  for (const Var<T>& in : inputs) {
    if (&in.graph() != this) throw Error("Graph::record: input from a different graph");
    n.needs_grad = n.needs_grad || nodes_[in.id()].needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

template <typename T>
const Tensor<T>& Graph<T>::value(std::uint32_t id) const {
  const Node& n = nodes_.at(id);
  return n.param ? *n.param : n.owned;
}

template <typename T>
std::span<T> Graph<T>::grad(std::uint32_t id) {
  Node& n = nodes_.at(id);
  if (n.param) return n.param->grad();
  const std::size_t len = n.owned.size();
  if (n.grad.size() != len) n.grad.assign(len, T(0));
  return n.grad;
}

template <typename T>
std::span<const T> Graph<T>::grad_view(std::uint32_t id) const {
  const Node& n = nodes_.at(id);
  if (n.param) return static_cast<const Tensor<T>&>(*n.param).grad();
  return n.grad;
}

template <typename T>
void Graph<T>::backward(Var<T> loss) {
  if (&loss.graph() != this) throw Error("Graph::backward: loss from a different graph");
  if (value(loss.id()).size() != 1) {
    throw DimensionError("backward needs a scalar loss, got shape " + shape_to_string(value(loss.id()).shape()));
  }
  for (Node& n : nodes_) {
    if (n.param) {
      if (n.needs_grad) n.param->grad();
    } else {
      n.grad.clear();
    }
  }
  if (!nodes_[loss.id()].needs_grad) return;
  grad(loss.id())[0] += T(1);
  for (std::uint32_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(std::span<const T>(n.grad));
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace dmf
