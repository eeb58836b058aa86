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

#include "dmf/model.hpp"

#include <string>

#include "dmf/error.hpp"
#include "dmf/vocab.hpp"

namespace dmf {

namespace {

std::size_t halved(std::size_t x) { return (x - 1) / 2 + 1; }  // 3x3, stride 2, padding 1

template <typename T>
GruParams<T> add_gru(ParamStore<T>& store, const std::string& prefix, std::size_t in, std::size_t hidden, Rng& rng) {
  GruParams<T> p;
  p.input_weights = &store.add(prefix + ".w_input", init_params<T>({3 * hidden, in}, InitScheme::kGlorotUniform, rng));
  p.hidden_weights =
      &store.add(prefix + ".w_hidden", init_params<T>({3 * hidden, hidden}, InitScheme::kGlorotUniform, rng));
  p.bias = &store.add(prefix + ".bias", init_params<T>({3 * hidden}, InitScheme::kZeros, rng));
  return p;
}

template <typename T>
Tensor<T>* add_weight(ParamStore<T>& store, const std::string& name, Shape shape, Rng& rng) {
  return &store.add(name, init_params<T>(shape, InitScheme::kGlorotUniform, rng));
}

template <typename T>
Tensor<T>* add_bias(ParamStore<T>& store, const std::string& name, std::size_t n, Rng& rng) {
  return &store.add(name, init_params<T>({n}, InitScheme::kZeros, rng));
}

const Tensor<float>& require(const Checkpoint& ckpt, const std::string& name, std::size_t rank) {
  const Tensor<float>* t = ckpt.find(name);
  if (!t) throw FormatError("checkpoint lacks tensor " + name);
  if (t->rank() != rank) throw FormatError("checkpoint tensor " + name + " has shape " + shape_to_string(t->shape()));
  return *t;
}

template <typename T>
GruVars<T> bind_gru(Graph<T>& g, const GruParams<T>& p, bool trainable) {
  if (!p.input_weights) return {};
  auto b = [&](Tensor<T>* t) { return trainable ? g.parameter(*t) : g.frozen(*t); };
  return {b(p.input_weights), b(p.hidden_weights), b(p.bias)};
}

}  // namespace

std::string_view variant_name(VariantKind kind) {
  switch (kind) {
    case VariantKind::kProposal:
      return "proposal";
    case VariantKind::kF2C:
      return "f2c";
    case VariantKind::kM2C:
      return "m2c";
    case VariantKind::kC2C:
      return "c2c";
  }
  return "unknown";
}

VariantKind parse_variant(std::string_view name) {
  for (VariantKind k : {VariantKind::kProposal, VariantKind::kF2C, VariantKind::kM2C, VariantKind::kC2C}) {
    if (variant_name(k) == name) return k;
  }
  throw Error("unknown model variant \"" + std::string(name) + "\" (expected proposal, f2c, m2c or c2c)");
}

VariantKind variant_from_tag(std::uint8_t tag) {
  if (tag > 3) throw FormatError("checkpoint variant tag " + std::to_string(tag) + " is not a known model kind");
  return static_cast<VariantKind>(tag);
}

ModelConfig ModelConfig::full(VariantKind kind, std::size_t vocab_size) {
  ModelConfig c;
  c.kind = kind;
  c.vocab_size = vocab_size;
  return c;
}

ModelConfig ModelConfig::desk(VariantKind kind, std::size_t vocab_size) {
  ModelConfig c;
  c.kind = kind;
  c.vocab_size = vocab_size;
  c.embed_dim = 64;
  c.enc_hidden = 64;
  c.dec_hidden = 128;
  c.gate_dim = 64;
  c.frame_height = 18;
  c.frame_width = 32;
  c.conv_channels = {8, 16, 32};
  c.linear_hidden = {128, 96};
  return c;
}

ModelConfig ModelConfig::tiny(VariantKind kind, std::size_t vocab_size) {
  ModelConfig c;
  c.kind = kind;
  c.vocab_size = vocab_size;
  c.embed_dim = 6;
  c.enc_hidden = 8;
  c.dec_hidden = 16;
  c.gate_dim = 5;
  c.frame_channels = 1;
  c.frame_height = 6;
  c.frame_width = 8;
  c.conv_channels = {2, 3, 2};
  c.linear_hidden = {7, 6};
  return c;
}

std::size_t ModelConfig::cnn_flat_dim() const {
  return conv_channels[2] * halved(halved(halved(frame_height))) * halved(halved(halved(frame_width)));
}

bool ModelConfig::uses_frame_gru() const { return kind == VariantKind::kProposal || kind == VariantKind::kC2C; }
bool ModelConfig::uses_word_gru() const { return kind != VariantKind::kF2C; }
bool ModelConfig::uses_sentence_gru() const { return uses_frame_gru(); }
bool ModelConfig::uses_gate() const { return kind == VariantKind::kProposal; }

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw Error(std::string("model config: ") + what + " must be positive");
  };
  if (vocab_size <= Vocabulary::kNumReserved) {
    throw Error("model config: vocab_size must exceed the " + std::to_string(Vocabulary::kNumReserved) +
                " reserved ids, got " + std::to_string(vocab_size));
  }
  positive(embed_dim, "embed_dim");
  positive(enc_hidden, "enc_hidden");
  positive(gate_dim, "gate_dim");
  positive(frame_height, "frame_height");
  positive(frame_width, "frame_width");
  for (std::size_t c : conv_channels) positive(c, "conv channels");
  for (std::size_t l : linear_hidden) positive(l, "linear widths");
  if (frame_channels != 1 && frame_channels != 3) throw Error("model config: frame_channels must be 1 or 3");
  if (dec_hidden != 2 * enc_hidden) {
    throw Error("model config: dec_hidden (" + std::to_string(dec_hidden) + ") must be twice enc_hidden (" +
                std::to_string(enc_hidden) + ")");
  }
}

template <typename T>
Model<T>::Model(const ModelConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const ModelConfig& c = config_;
  ParamStore<T>& s = params_;

  std::size_t in_ch = c.frame_channels;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string p = "video_enc.conv" + std::to_string(i + 1);
    video.conv_weight[i] = add_weight(s, p + ".weight", {c.conv_channels[i], in_ch, 3, 3}, rng);
    video.conv_bias[i] = add_bias(s, p + ".bias", c.conv_channels[i], rng);
    in_ch = c.conv_channels[i];
  }
  const std::size_t widths[4] = {c.cnn_flat_dim(), c.linear_hidden[0], c.linear_hidden[1], c.enc_hidden};
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string p = "video_enc.fc" + std::to_string(i + 1);
    video.fc_weight[i] = add_weight(s, p + ".weight", {widths[i + 1], widths[i]}, rng);
    video.fc_bias[i] = add_bias(s, p + ".bias", widths[i + 1], rng);
  }
  if (c.uses_frame_gru()) video.frame_gru = add_gru(s, "video_enc.frame_gru", c.enc_hidden, c.enc_hidden, rng);

  text.embedding = add_weight(s, "text_enc.embedding", {c.vocab_size, c.embed_dim}, rng);
  if (c.uses_word_gru()) text.word_gru = add_gru(s, "text_enc.word_gru", c.embed_dim, c.enc_hidden, rng);
  if (c.uses_sentence_gru()) text.sentence_gru = add_gru(s, "text_enc.sentence_gru", c.enc_hidden, c.enc_hidden, rng);

  if (c.uses_gate()) {
    gate.w_video = add_weight(s, "gate.w_video", {c.gate_dim, c.enc_hidden}, rng);
    gate.b_video = add_bias(s, "gate.b_video", c.gate_dim, rng);
    gate.w_comment = add_weight(s, "gate.w_comment", {c.gate_dim, c.enc_hidden}, rng);
    gate.b_comment = add_bias(s, "gate.b_comment", c.gate_dim, rng);
    gate.u = add_weight(s, "gate.u", {1, c.gate_dim}, rng);
  }

  dec.embedding = text.embedding;
  if (c.kind == VariantKind::kF2C) {
    dec.init_weight = add_weight(s, "dec.init.weight", {c.dec_hidden, c.enc_hidden}, rng);
    dec.init_bias = add_bias(s, "dec.init.bias", c.dec_hidden, rng);
  }
  dec.gru = add_gru(s, "dec.gru", c.embed_dim, c.dec_hidden, rng);
  dec.w_out = add_weight(s, "dec.w_out", {c.vocab_size, c.dec_hidden}, rng);
}

template <typename T>
Checkpoint Model<T>::to_checkpoint() const {
  return dmf::to_checkpoint(params_, static_cast<std::uint8_t>(config_.kind));
}

template <typename T>
void Model<T>::load(const Checkpoint& ckpt) {
  const VariantKind k = variant_from_tag(ckpt.kind);
  if (k != config_.kind) {
    throw FormatError("checkpoint holds a " + std::string(variant_name(k)) + " model, expected " +
                      std::string(variant_name(config_.kind)));
  }
  restore_params(ckpt, params_);
}

ModelConfig infer_config(const Checkpoint& ckpt, std::size_t channels, std::size_t height, std::size_t width) {
  ModelConfig c;
  c.kind = variant_from_tag(ckpt.kind);
  const auto& emb = require(ckpt, "text_enc.embedding", 2);
  c.vocab_size = emb.dim(0);
  c.embed_dim = emb.dim(1);
  for (std::size_t i = 0; i < 3; ++i) {
    c.conv_channels[i] = require(ckpt, "video_enc.conv" + std::to_string(i + 1) + ".weight", 4).dim(0);
  }
  c.linear_hidden[0] = require(ckpt, "video_enc.fc1.weight", 2).dim(0);
  c.linear_hidden[1] = require(ckpt, "video_enc.fc2.weight", 2).dim(0);
  c.enc_hidden = require(ckpt, "video_enc.fc3.weight", 2).dim(0);
  c.dec_hidden = require(ckpt, "dec.w_out", 2).dim(1);
  if (c.uses_gate()) c.gate_dim = require(ckpt, "gate.w_video", 2).dim(0);
  c.frame_channels = channels;
  c.frame_height = height;
  c.frame_width = width;
  const auto& conv1 = require(ckpt, "video_enc.conv1.weight", 4);
  if (conv1.dim(1) != channels) {
    throw FormatError("checkpoint expects " + std::to_string(conv1.dim(1)) + "-channel frames, corpus has " +
                      std::to_string(channels));
  }
  if (require(ckpt, "video_enc.fc1.weight", 2).dim(1) != c.cnn_flat_dim()) {
    throw FormatError("checkpoint CNN does not fit " + std::to_string(height) + "x" + std::to_string(width) +
                      " frames");
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return c;
}

template <typename T>
BoundModel<T> bind_model(Graph<T>& g, Model<T>& model, bool trainable) {
  BoundModel<T> b;
  b.model = &model;
  auto bind = [&](Tensor<T>* t) { return t == nullptr ? Var<T>() : trainable ? g.parameter(*t) : g.frozen(*t); };
  for (std::size_t i = 0; i < 3; ++i) {
    b.conv_weight[i] = bind(model.video.conv_weight[i]);
    b.conv_bias[i] = bind(model.video.conv_bias[i]);
    b.fc_weight[i] = bind(model.video.fc_weight[i]);
    b.fc_bias[i] = bind(model.video.fc_bias[i]);
  }
  b.frame_gru = bind_gru(g, model.video.frame_gru, trainable);
  b.embedding = bind(model.text.embedding);
  b.word_gru = bind_gru(g, model.text.word_gru, trainable);
  b.sentence_gru = bind_gru(g, model.text.sentence_gru, trainable);
  b.gate_w_video = bind(model.gate.w_video);
  b.gate_b_video = bind(model.gate.b_video);
  b.gate_w_comment = bind(model.gate.w_comment);
  b.gate_b_comment = bind(model.gate.b_comment);
  b.gate_u = bind(model.gate.u);
  b.dec_gru = bind_gru(g, model.dec.gru, trainable);
  b.w_out = bind(model.dec.w_out);
  b.init_weight = bind(model.dec.init_weight);
  b.init_bias = bind(model.dec.init_bias);
  return b;
}

template <typename T>
BoundModel<T> bind_frozen(Graph<T>& g, const Model<T>& model) {
  // Frozen binding only reads the tensors.
  return bind_model(g, const_cast<Model<T>&>(model), false);
}

template class Model<float>;
template class Model<double>;
template BoundModel<float> bind_model(Graph<float>&, Model<float>&, bool);
template BoundModel<double> bind_model(Graph<double>&, Model<double>&, bool);
template BoundModel<float> bind_frozen(Graph<float>&, const Model<float>&);
template BoundModel<double> bind_frozen(Graph<double>&, const Model<double>&);

}  // namespace dmf
