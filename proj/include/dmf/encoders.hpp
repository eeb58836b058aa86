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
#include <span>
#include <vector>

#include "dmf/corpus.hpp"
#include "dmf/model.hpp"

namespace dmf {

/// Right-padded token rows. Row r holds lengths[r] ids followed by PAD.
struct TokenBatch {
  std::size_t rows = 0;
  std::size_t max_len = 0;
  std::vector<TokenId> ids;  // rows x max_len
  std::vector<std::size_t> lengths;

  static TokenBatch from(std::span<const std::vector<TokenId>* const> seqs);
};

// Stacks frames into [N x C x H x W]; every frame must match the model.
template <typename T>
Tensor<T> stack_frames(std::span<const Frame* const> frames, const ModelConfig& config);

// images [N x C x H x W] -> frame vectors [N x He].
template <typename T>
Var<T> cnn_forward(const BoundModel<T>& m, Var<T> images);

// Runs a GRU from the zero state over per-step inputs [B x D] and returns
// the last hidden state [B x H].
template <typename T>
Var<T> gru_sequence(const GruVars<T>& weights, std::span<const Var<T>> steps, std::size_t hidden);

// Word-level GRU over padded rows; each row stops updating after its last
// token, so the result is the hidden state at that token. -> [rows x He]
template <typename T>
Var<T> word_gru_forward(const BoundModel<T>& m, Graph<T>& g, const TokenBatch& batch);

// Single-example forms, evaluated on a frozen model.
template <typename T>
Tensor<T> encode_frame(const Model<T>& model, const Frame& frame);
template <typename T>
Tensor<T> encode_video(const Model<T>& model, std::span<const FramePtr> frames);
template <typename T>
Tensor<T> encode_comment(const Model<T>& model, const Comment& comment);
template <typename T>
Tensor<T> encode_context(const Model<T>& model, std::span<const Comment> comments);

}  // namespace dmf
