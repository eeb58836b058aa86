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

#include "dmf/adam.hpp"
#include "dmf/corpus.hpp"
#include "dmf/encoders.hpp"
#include "dmf/model.hpp"

namespace dmf {

/// Model inputs for a batch of clips, laid out step-major: frame step s of
/// clip b is frames[s * size + b], and comment j of clip b is row j * size + b
/// of `comments`. Which inputs are present depends on the variant: F2C takes
/// the anchor frame only, M2C adds the nearest context comment, C2C and the
/// proposal take all frames and all context comments.
struct ClipBatch {
  std::size_t size = 0;
  std::size_t frame_steps = 0;
  std::vector<const Frame*> frames;
  std::size_t comment_steps = 0;
  TokenBatch comments;
  TokenBatch targets;
};

// Clips must agree on frame and context counts. Pointers into `clips` are
// kept, so the clips must outlive the batch.
ClipBatch make_batch(std::span<const Clip> clips, std::span<const std::size_t> indices, VariantKind kind);
ClipBatch make_batch(std::span<const Clip> clips, VariantKind kind);

template <typename T>
struct GateOutput {
  Var<T> fused;    // [B x 2He]
  Var<T> weights;  // [B x 2], columns (comment weight, video weight)
};

/// Gated fusion of the video vector v_v and the comment vector v_c:
///   s_v = u . relu(W_v v_v + b_v),  s_c = u . relu(W_c v_c + b_c)
///   (g_c, g_v) = softmax(s_c, s_v)
///   h = [g_c * v_c, g_v * v_v]
/// With swap_gate_pairing the two weights trade places in h.
template <typename T>
GateOutput<T> gate_fuse(const BoundModel<T>& m, Var<T> v_video, Var<T> v_comment);

template <typename T>
struct GateResult {
  Tensor<T> fused;  // [2He]
  T comment_score = 0, video_score = 0;
  T comment_weight = 0, video_weight = 0;
};

template <typename T>
GateResult<T> gate_fuse(const Model<T>& model, const Tensor<T>& v_video, const Tensor<T>& v_comment);

template <typename T>
struct Encoded {
  Var<T> init_hidden;   // [B x Hd]
  Var<T> gate_weights;  // proposal only
};

template <typename T>
Encoded<T> encode_batch(const BoundModel<T>& m, Graph<T>& g, const ClipBatch& batch);

template <typename T>
struct DecoderStep {
  Var<T> hidden;  // [k x Hd]
  Var<T> logits;  // [k x V]
};

// One decoder GRU step on input tokens followed by the output projection.
template <typename T>
DecoderStep<T> decoder_step(const BoundModel<T>& m, Var<T> hidden, std::span<const TokenId> inputs);

template <typename T>
struct DecodeOutput {
  Var<T> loss;  // mean negative log-likelihood over scored tokens
  std::size_t tokens = 0;
  // Natural-log probability of each scored token (targets then EOS), per row.
  std::vector<std::vector<double>> log_probs;
};

/// Decoder pass over padded targets. Row r reads BOS then, for later steps,
/// its gold previous token when teacher[r] is set or the argmax of its own
/// previous step otherwise. Row r scores lengths[r] + 1 tokens (the target
/// and EOS); padding is excluded from the loss. An empty teacher span means
/// teacher forcing everywhere.
template <typename T>
DecodeOutput<T> decode_loss(const BoundModel<T>& m, Var<T> init_hidden, const TokenBatch& targets,
                            std::span<const std::uint8_t> teacher);

// Mean loss of one batch. With backward set, parameter gradients are zeroed
// and then filled by backpropagation of that loss.
template <typename T>
double batch_loss(Model<T>& model, const ClipBatch& batch, std::span<const std::uint8_t> teacher, bool backward);

// Draws one teacher-forcing coin per sequence, backpropagates the mean
// token loss and applies one Adam update. Returns the loss before the update.
template <typename T>
double train_step(Model<T>& model, AdamState<T>& adam, const ClipBatch& batch, double teacher_forcing, Rng& rng,
                  double grad_clip = 0);

// Decoder-initial hidden state for one clip, [Hd].
template <typename T>
Tensor<T> fused_context(const Model<T>& model, const Clip& clip);

struct SequenceScore {
  double log_prob = 0;              // natural log of p(target, EOS | h)
  std::vector<double> token_probs;  // one per scored token
};

template <typename T>
SequenceScore sequence_log_prob(const Model<T>& model, std::span<const T> init_hidden, const Comment& target);

// Teacher-forced natural-log token probabilities for every clip, in order.
template <typename T>
std::vector<std::vector<double>> teacher_forced_log_probs(const Model<T>& model, std::span<const Clip> clips,
                                                          std::size_t batch_size = 64);

}  // namespace dmf
