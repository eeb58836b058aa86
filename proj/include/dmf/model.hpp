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

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

#include "dmf/checkpoint.hpp"
#include "dmf/graph.hpp"
#include "dmf/ops.hpp"
#include "dmf/params.hpp"
#include "dmf/rng.hpp"

namespace dmf {

// Values are the checkpoint's kind tag.
enum class VariantKind : std::uint8_t { kProposal = 0, kF2C = 1, kM2C = 2, kC2C = 3 };

std::string_view variant_name(VariantKind kind);
// Accepts "proposal", "f2c", "m2c", "c2c"; throws Error otherwise.
VariantKind parse_variant(std::string_view name);
VariantKind variant_from_tag(std::uint8_t tag);

/// Architecture of one model variant.
///
/// The CNN is three 3x3 stride-2 padding-1 convolutions (ReLU after each),
/// a flatten, and three linear layers (ReLU between, none after the last)
/// ending at enc_hidden. All encoder GRUs use enc_hidden; the decoder GRU
/// uses dec_hidden, which must be 2 * enc_hidden.
struct ModelConfig {
  VariantKind kind = VariantKind::kProposal;
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 300;
  std::size_t enc_hidden = 300;
  std::size_t dec_hidden = 600;
  std::size_t gate_dim = 300;
  std::size_t frame_channels = 3;
  std::size_t frame_height = 72;
  std::size_t frame_width = 128;
  std::array<std::size_t, 3> conv_channels{16, 32, 64};
  std::array<std::size_t, 2> linear_hidden{512, 384};
  // Weight v_c by e^{s_v} and v_v by e^{s_c} instead of the default pairing.
  bool swap_gate_pairing = false;

  // 300/600 dims on 3 x 72 x 128 frames.
  static ModelConfig full(VariantKind kind, std::size_t vocab_size);
  // Hidden 64/128 on 3 x 18 x 32 frames with a narrower CNN.
  static ModelConfig desk(VariantKind kind, std::size_t vocab_size);
  // Hidden 8/16 on 1 x 6 x 8 frames, for exhaustive gradient checks.
  static ModelConfig tiny(VariantKind kind, std::size_t vocab_size);

  std::size_t cnn_flat_dim() const;
  bool uses_frame_gru() const;
  bool uses_word_gru() const;
  bool uses_sentence_gru() const;
  bool uses_gate() const;
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <typename T>
struct GruParams {
  Tensor<T>* input_weights = nullptr;   // [3H x D]
  Tensor<T>* hidden_weights = nullptr;  // [3H x H]
  Tensor<T>* bias = nullptr;            // [3H]
};

template <typename T>
struct VideoEncoderParams {
  std::array<Tensor<T>*, 3> conv_weight{};  // [O x C x 3 x 3]
  std::array<Tensor<T>*, 3> conv_bias{};
  std::array<Tensor<T>*, 3> fc_weight{};    // [out x in]
  std::array<Tensor<T>*, 3> fc_bias{};
  GruParams<T> frame_gru;                   // unset for single-frame variants
};

template <typename T>
struct TextEncoderParams {
  Tensor<T>* embedding = nullptr;  // [V x E], the decoder's embedding too
  GruParams<T> word_gru;
  GruParams<T> sentence_gru;
};

template <typename T>
struct GateParams {
  Tensor<T>* w_video = nullptr;    // [G x He]
  Tensor<T>* b_video = nullptr;    // [G]
  Tensor<T>* w_comment = nullptr;  // [G x He]
  Tensor<T>* b_comment = nullptr;  // [G]
  Tensor<T>* u = nullptr;          // [1 x G], shared by both branches
};

template <typename T>
struct DecoderParams {
  Tensor<T>* embedding = nullptr;  // same tensor as TextEncoderParams::embedding
  GruParams<T> gru;                // input E, hidden Hd
  Tensor<T>* w_out = nullptr;      // [V x Hd]
  Tensor<T>* init_weight = nullptr;  // F2C only: [Hd x He]
  Tensor<T>* init_bias = nullptr;    // F2C only: [Hd]
};

/// All trainable tensors of one variant plus typed views into them.
/// Tensor names are prefixed "video_enc.", "text_enc.", "gate." and "dec.".
template <typename T>
class Model {
 public:
  // Glorot-uniform weights and zero biases drawn from rng.
  Model(const ModelConfig& config, Rng& rng);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelConfig& config() const { return config_; }
  VariantKind kind() const { return config_.kind; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  VideoEncoderParams<T> video;
  TextEncoderParams<T> text;
  GateParams<T> gate;
  DecoderParams<T> dec;

  Checkpoint to_checkpoint() const;
  // Restores weights; the checkpoint's kind tag and shapes must match.
  void load(const Checkpoint& ckpt);

 private:
  ModelConfig config_;
  ParamStore<T> params_;
};

// Reads dims from tensor shapes. Frame height/width cannot be recovered from
// the flattened CNN width, so the caller supplies the corpus frame shape.
ModelConfig infer_config(const Checkpoint& ckpt, std::size_t channels, std::size_t height, std::size_t width);

/// Graph handles for every parameter of a model.
template <typename T>
struct BoundModel {
  const Model<T>* model = nullptr;
  std::array<Var<T>, 3> conv_weight, conv_bias, fc_weight, fc_bias;
  GruVars<T> frame_gru, word_gru, sentence_gru, dec_gru;
  Var<T> embedding, w_out, init_weight, init_bias;
  Var<T> gate_w_video, gate_b_video, gate_w_comment, gate_b_comment, gate_u;
};

// trainable=false binds frozen views: nothing is written during backward,
// so one frozen model can serve several threads.
template <typename T>
BoundModel<T> bind_model(Graph<T>& g, Model<T>& model, bool trainable);
template <typename T>
BoundModel<T> bind_frozen(Graph<T>& g, const Model<T>& model);

extern template class Model<float>;
extern template class Model<double>;

}  // namespace dmf
