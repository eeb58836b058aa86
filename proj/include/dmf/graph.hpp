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
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "dmf/tensor.hpp"

namespace dmf {

template <typename T>
class Graph;

// Handle to one node of a Graph. Cheap to copy; valid while the graph lives.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Graph<T>* graph, std::uint32_t id) : graph_(graph), id_(id) {}

  Graph<T>& graph() const { return *graph_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  bool needs_grad() const;
  // Gradient of the last backward() w.r.t. this node.
  std::span<const T> grad() const;

 private:
  Graph<T>* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Tape for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so ids are a topological order and
/// every input id is smaller than its consumer's. Parameter nodes alias an
/// external tensor; backward() accumulates into that tensor's grad slot and
/// leaves the values untouched. A graph and its nodes belong to one thread.
template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(std::span<const T> out_grad)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<T> constant(Tensor<T> value);
  Var<T> leaf(Tensor<T> value, bool requires_grad = true);
  Var<T> parameter(Tensor<T>& param);
  // Read-only view of a parameter; never receives a gradient.
  Var<T> frozen(const Tensor<T>& param);

  // Appends an op result. The backward closure is kept only when some input
  // needs a gradient.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn backward);

  const Tensor<T>& value(std::uint32_t id) const;
  bool needs_grad(std::uint32_t id) const { return nodes_[id].needs_grad; }
  // Mutable gradient buffer for accumulation; allocated on first request.
  std::span<T> grad(std::uint32_t id);
  std::span<const T> grad_view(std::uint32_t id) const;

  // Seeds d(loss)/d(loss) = 1 and walks the tape backwards. Parameter
  // gradients are accumulated, never reset, so callers zero them per step.
  void backward(Var<T> loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> owned;
    Tensor<T>* param = nullptr;
    std::vector<T> grad;
    bool needs_grad = false;
    BackwardFn backward;
  };

  Var<T> push(Node node);

  std::vector<Node> nodes_;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return graph_->value(id_);
}

template <typename T>
bool Var<T>::needs_grad() const {
  return graph_->needs_grad(id_);
}

template <typename T>
std::span<const T> Var<T>::grad() const {
  return graph_->grad_view(id_);
}

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace dmf
