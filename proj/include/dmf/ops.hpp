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
#include <span>
#include <vector>

#include "dmf/graph.hpp"

// Differentiable operations. Each op checks its shapes, computes the forward
// value eagerly and registers the gradient rule on the input's graph.
// "Batch" matrices are rank-2 [rows x features].

namespace dmf {

// [M x K] * [K x N] -> [M x N]
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);

// x[B x D] * w[H x D]^T + bias[H] -> [B x H]. Weights are stored [out x in].
template <typename T>
Var<T> affine(Var<T> x, Var<T> w, Var<T> bias);
template <typename T>
Var<T> linear(Var<T> x, Var<T> w);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
// Hadamard product.
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> a, T factor);

template <typename T>
Var<T> relu(Var<T> x);
template <typename T>
Var<T> sigmoid(Var<T> x);
template <typename T>
Var<T> tanh(Var<T> x);

// Softmax along the last dimension of a rank-1 or rank-2 tensor, with the
// row maximum subtracted before exponentiation.
template <typename T>
Var<T> softmax(Var<T> x);

// Sum of all elements -> shape [1].
template <typename T>
Var<T> sum(Var<T> x);

template <typename T>
Var<T> reshape(Var<T> x, Shape shape);

// [B x P], [B x Q] -> [B x (P + Q)]
template <typename T>
Var<T> concat_cols(Var<T> a, Var<T> b);
// Rows [start, start + count) of a rank-2 tensor.
template <typename T>
Var<T> slice_rows(Var<T> x, std::size_t start, std::size_t count);
// Column j of [B x N] -> [B x 1]
template <typename T>
Var<T> column(Var<T> x, std::size_t j);
// x[B x D] with row i multiplied by s[i]; s is [B x 1].
template <typename T>
Var<T> scale_rows(Var<T> x, Var<T> s);
// Row i from a where take_a[i] is set, else from b.
template <typename T>
Var<T> select_rows(std::span<const std::uint8_t> take_a, Var<T> a, Var<T> b);
// Stacks the rows of table[V x E] named by ids -> [ids.size() x E].
template <typename T>
Var<T> embedding(Var<T> table, std::span<const std::int32_t> ids);

// sum_i weights[i] * -log softmax(logits[i])[targets[i]] -> shape [1].
// Rows with zero weight contribute nothing.
template <typename T>
Var<T> cross_entropy(Var<T> logits, std::span<const std::int32_t> targets, std::span<const T> weights);

// Cross-correlation (no kernel flip). input [N x C x H x W] or [C x H x W],
// kernel [O x C x kH x kW], optional bias [O].
// Output spatial size is floor((H + 2 * padding - kH) / stride) + 1.
template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, std::size_t stride, std::size_t padding);
template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, Var<T> bias, std::size_t stride, std::size_t padding);

/// GRU weight set for input size D and hidden size H. Gate blocks are
/// stacked in the order update (z), reset (r), candidate:
///   input_weights  [3H x D]  = [W_z; W_r; W_h]
///   hidden_weights [3H x H]  = [U_z; U_r; U_h]
///   bias           [3H]      = [b_z; b_r; b_h]
template <typename T>
struct GruVars {
  Var<T> input_weights;
  Var<T> hidden_weights;
  Var<T> bias;
};

/// One GRU step over a batch, x[B x D], h_prev[B x H] -> [B x H]:
///   z  = sigmoid(W_z x + U_z h + b_z)
///   r  = sigmoid(W_r x + U_r h + b_r)
///   h~ = tanh(W_h x + U_h (r * h) + b_h)
///   h' = z * h + (1 - z) * h~
template <typename T>
Var<T> gru_cell(Var<T> x, Var<T> h_prev, const GruVars<T>& weights);

}  // namespace dmf
