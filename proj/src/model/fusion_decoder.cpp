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

#include "dmf/fusion_decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dmf/error.hpp"

namespace dmf {

namespace {

// Natural-log softmax of one logits row at `target`, in double.
template <typename T>
double log_softmax_at(const T* row, std::size_t n, std::size_t target) {
  double mx = row[0];
  for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, static_cast<double>(row[j]));
  double z = 0;
  for (std::size_t j = 0; j < n; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
  return static_cast<double>(row[target]) - mx - std::log(z);
}

template <typename T>
TokenId argmax_row(const T* row, std::size_t n) {
  return static_cast<TokenId>(std::max_element(row, row + n) - row);
}

}  // namespace

ClipBatch make_batch(std::span<const Clip> clips, std::span<const std::size_t> indices, VariantKind kind) {
  if (indices.empty()) throw DataError("make_batch: empty batch");
  ClipBatch b;
  b.size = indices.size();
  const Clip& first = clips[indices[0]];
  const std::size_t n = first.frames.size(), m = first.context.size();
  for (std::size_t i : indices) {
    if (i >= clips.size()) throw DataError("make_batch: clip index out of range");
    if (clips[i].frames.size() != n || clips[i].context.size() != m) {
      throw DataError("make_batch: clips disagree on frame or context counts");
    }
    if (n == 0) throw DataError("make_batch: clip without frames");
  }
  const bool full = kind == VariantKind::kProposal || kind == VariantKind::kC2C;
  b.frame_steps = full ? n : 1;
  for (std::size_t s = 0; s < b.frame_steps; ++s) {
    const std::size_t f = full ? s : n - 1;
    for (std::size_t i : indices) b.frames.push_back(clips[i].frames[f].get());
  }
  std::vector<const std::vector<TokenId>*> rows;
  if (kind == VariantKind::kM2C) {
    b.comment_steps = 1;
    for (std::size_t i : indices) rows.push_back(&clips[i].nearest_context().tokens);
  } else if (full) {
    if (m == 0) throw DataError("make_batch: variant needs context comments");
    b.comment_steps = m;
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i : indices) rows.push_back(&clips[i].context[j].tokens);
  }
  if (!rows.empty()) b.comments = TokenBatch::from(rows);
  rows.clear();
  for (std::size_t i : indices) rows.push_back(&clips[i].target.tokens);
  b.targets = TokenBatch::from(rows);
  return b;
}

ClipBatch make_batch(std::span<const Clip> clips, VariantKind kind) {
  std::vector<std::size_t> all(clips.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return make_batch(clips, all, kind);
}

template <typename T>
GateOutput<T> gate_fuse(const BoundModel<T>& m, Var<T> v_video, Var<T> v_comment) {
  if (!m.gate_u.valid()) throw Error("this model variant has no gate");
  const Var<T> s_video = linear(relu(affine(v_video, m.gate_w_video, m.gate_b_video)), m.gate_u);
  const Var<T> s_comment = linear(relu(affine(v_comment, m.gate_w_comment, m.gate_b_comment)), m.gate_u);
  const Var<T> weights = softmax(concat_cols(s_comment, s_video));
  Var<T> g_comment = column(weights, 0), g_video = column(weights, 1);
  if (m.model->config().swap_gate_pairing) std::swap(g_comment, g_video);
  return {concat_cols(scale_rows(v_comment, g_comment), scale_rows(v_video, g_video)), weights};
}

template <typename T>
GateResult<T> gate_fuse(const Model<T>& model, const Tensor<T>& v_video, const Tensor<T>& v_comment) {
  Graph<T> g;
  const BoundModel<T> m = bind_frozen(g, model);
  const std::size_t he = model.config().enc_hidden;
  if (v_video.size() != he || v_comment.size() != he) {
    throw DimensionError("gate_fuse: inputs must have " + std::to_string(he) + " elements, got " +
                         shape_to_string(v_video.shape()) + " and " + shape_to_string(v_comment.shape()));
  }
  auto row = [&](const Tensor<T>& v) { return g.constant(Tensor<T>({1, he}, {v.data().begin(), v.data().end()})); };
  const Var<T> vv = row(v_video), vc = row(v_comment);
  const GateOutput<T> out = gate_fuse(m, vv, vc);
  GateResult<T> r;
  r.fused = Tensor<T>({2 * he}, {out.fused.value().data().begin(), out.fused.value().data().end()});
  r.comment_weight = out.weights.value()[0];
  r.video_weight = out.weights.value()[1];
  r.video_score = linear(relu(affine(vv, m.gate_w_video, m.gate_b_video)), m.gate_u).value()[0];
  r.comment_score = linear(relu(affine(vc, m.gate_w_comment, m.gate_b_comment)), m.gate_u).value()[0];
  return r;
}

template <typename T>
Encoded<T> encode_batch(const BoundModel<T>& m, Graph<T>& g, const ClipBatch& batch) {
  const ModelConfig& cfg = m.model->config();
  const std::size_t bsz = batch.size;
  const Var<T> frames = cnn_forward(m, g.constant(stack_frames<T>(batch.frames, cfg)));
  Encoded<T> out;
  switch (cfg.kind) {
    case VariantKind::kF2C:
      out.init_hidden = affine(frames, m.init_weight, m.init_bias);
      return out;
    case VariantKind::kM2C:
      if (batch.comment_steps != 1) throw DataError("m2c batch needs exactly one comment per clip");
      out.init_hidden = concat_cols(frames, word_gru_forward(m, g, batch.comments));
      return out;
    case VariantKind::kC2C:
    case VariantKind::kProposal:
      break;
  }
  if (batch.comment_steps == 0) throw DataError("batch has no context comments");
  std::vector<Var<T>> steps;
  for (std::size_t s = 0; s < batch.frame_steps; ++s) steps.push_back(slice_rows(frames, s * bsz, bsz));
  const Var<T> v_video = gru_sequence<T>(m.frame_gru, steps, cfg.enc_hidden);
  const Var<T> words = word_gru_forward(m, g, batch.comments);
  steps.clear();
  for (std::size_t j = 0; j < batch.comment_steps; ++j) steps.push_back(slice_rows(words, j * bsz, bsz));
  const Var<T> v_comment = gru_sequence<T>(m.sentence_gru, steps, cfg.enc_hidden);
  if (cfg.kind == VariantKind::kC2C) {
    out.init_hidden = concat_cols(v_comment, v_video);
  } else {
    const GateOutput<T> gate = gate_fuse(m, v_video, v_comment);
    out.init_hidden = gate.fused;
    out.gate_weights = gate.weights;
  }
  return out;
}

template <typename T>
DecoderStep<T> decoder_step(const BoundModel<T>& m, Var<T> hidden, std::span<const TokenId> inputs) {
  const Var<T> h = gru_cell(embedding(m.embedding, inputs), hidden, m.dec_gru);
  return {h, linear(h, m.w_out)};
}

template <typename T>
DecodeOutput<T> decode_loss(const BoundModel<T>& m, Var<T> init_hidden, const TokenBatch& targets,
                            std::span<const std::uint8_t> teacher) {
  const std::size_t rows = targets.rows, len = targets.max_len;
  const std::size_t vocab = m.model->config().vocab_size;
  if (init_hidden.shape()[0] != rows) throw DimensionError("decode_loss: hidden rows differ from target rows");
  if (!teacher.empty() && teacher.size() != rows) throw DimensionError("decode_loss: one teacher flag per row");
  for (TokenId t : targets.ids) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab) {
      throw DataError("target token id " + std::to_string(t) + " outside vocabulary of size " + std::to_string(vocab));
    }
  }
  DecodeOutput<T> out;
  out.log_probs.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) out.tokens += targets.lengths[r] + 1;
  const T weight = T(1) / static_cast<T>(out.tokens);

  auto gold = [&](std::size_t r, std::size_t t) -> TokenId {
    if (t < targets.lengths[r]) return targets.ids[r * len + t];
    return t == targets.lengths[r] ? Vocabulary::kEos : Vocabulary::kPad;
  };
  std::vector<TokenId> inputs(rows, Vocabulary::kBos), predicted(rows), goal(rows);
  std::vector<T> weights(rows);
  Var<T> hidden = init_hidden;
  for (std::size_t t = 0; t <= len; ++t) {
    if (t > 0) {
      for (std::size_t r = 0; r < rows; ++r) {
        const bool forced = teacher.empty() || teacher[r];
        inputs[r] = t > targets.lengths[r] ? Vocabulary::kPad : forced ? gold(r, t - 1) : predicted[r];
      }
    }
    const DecoderStep<T> step = decoder_step(m, hidden, inputs);
    hidden = step.hidden;
    const T* logits = step.logits.value().ptr();
    for (std::size_t r = 0; r < rows; ++r) {
      const bool scored = t <= targets.lengths[r];
      goal[r] = scored ? gold(r, t) : Vocabulary::kPad;
      weights[r] = scored ? weight : T(0);
      predicted[r] = argmax_row(logits + r * vocab, vocab);
      if (scored) {
        out.log_probs[r].push_back(log_softmax_at(logits + r * vocab, vocab, static_cast<std::size_t>(goal[r])));
      }
    }
    const Var<T> term = cross_entropy(step.logits, std::span<const TokenId>(goal), std::span<const T>(weights));
    out.loss = out.loss.valid() ? add(out.loss, term) : term;
  }
  return out;
}

template <typename T>
double batch_loss(Model<T>& model, const ClipBatch& batch, std::span<const std::uint8_t> teacher, bool backward) {
  Graph<T> g;
  const BoundModel<T> m = bind_model(g, model, backward);
  const Encoded<T> enc = encode_batch(m, g, batch);
  const DecodeOutput<T> dec = decode_loss(m, enc.init_hidden, batch.targets, teacher);
  if (backward) {
    model.params().zero_grad();
    g.backward(dec.loss);
  }
  return static_cast<double>(dec.loss.value()[0]);
}

template <typename T>
double train_step(Model<T>& model, AdamState<T>& adam, const ClipBatch& batch, double teacher_forcing, Rng& rng,
                  double grad_clip) {
  if (batch.size == 0) throw DataError("train_step: empty batch");
  std::vector<std::uint8_t> teacher(batch.size);
  for (auto& f : teacher) f = rng.bernoulli(teacher_forcing) ? 1 : 0;
  const double loss = batch_loss(model, batch, teacher, true);
  const std::vector<Tensor<T>*> params = model.params().tensors();
  if (grad_clip > 0) clip_grad_norm<T>(params, grad_clip);
  adam_step<T>(params, adam);
  return loss;
}

template <typename T>
Tensor<T> fused_context(const Model<T>& model, const Clip& clip) {
  Graph<T> g;
  const BoundModel<T> m = bind_frozen(g, model);
  const ClipBatch batch = make_batch(std::span<const Clip>(&clip, 1), model.kind());
  const Tensor<T>& h = encode_batch(m, g, batch).init_hidden.value();
  return Tensor<T>({h.size()}, {h.data().begin(), h.data().end()});
}

template <typename T>
SequenceScore sequence_log_prob(const Model<T>& model, std::span<const T> init_hidden, const Comment& target) {
  const std::size_t hd = model.config().dec_hidden;
  if (init_hidden.size() != hd) {
    throw DimensionError("sequence_log_prob: hidden state must have " + std::to_string(hd) + " elements");
  }
  if (target.tokens.empty()) throw DataError("sequence_log_prob: empty target");
  Graph<T> g;
  const BoundModel<T> m = bind_frozen(g, model);
  const std::vector<TokenId>* seq = &target.tokens;
  const TokenBatch targets = TokenBatch::from(std::span<const std::vector<TokenId>* const>(&seq, 1));
  const Var<T> h = g.constant(Tensor<T>({1, hd}, {init_hidden.begin(), init_hidden.end()}));
  const DecodeOutput<T> dec = decode_loss(m, h, targets, {});
  SequenceScore s;
  for (double lp : dec.log_probs[0]) {
    s.log_prob += lp;
    s.token_probs.push_back(std::exp(lp));
  }
  return s;
}

template <typename T>
std::vector<std::vector<double>> teacher_forced_log_probs(const Model<T>& model, std::span<const Clip> clips,
                                                          std::size_t batch_size) {
  std::vector<std::vector<double>> out;
  out.reserve(clips.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < clips.size(); start += batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(clips.size(), start + batch_size); ++i) idx.push_back(i);
    const ClipBatch batch = make_batch(clips, idx, model.kind());
    Graph<T> g;
    const BoundModel<T> m = bind_frozen(g, model);
    DecodeOutput<T> dec = decode_loss(m, encode_batch(m, g, batch).init_hidden, batch.targets, {});
    for (auto& row : dec.log_probs) out.push_back(std::move(row));
  }
  return out;
}

#define DMF_INSTANTIATE_DECODER(T)                                                                                  \
  template GateOutput<T> gate_fuse(const BoundModel<T>&, Var<T>, Var<T>);                                          \
  template GateResult<T> gate_fuse(const Model<T>&, const Tensor<T>&, const Tensor<T>&);                          \
  template Encoded<T> encode_batch(const BoundModel<T>&, Graph<T>&, const ClipBatch&);                             \
  template DecoderStep<T> decoder_step(const BoundModel<T>&, Var<T>, std::span<const TokenId>);                    \
  template DecodeOutput<T> decode_loss(const BoundModel<T>&, Var<T>, const TokenBatch&,                            \
                                       std::span<const std::uint8_t>);                                             \
  template double batch_loss(Model<T>&, const ClipBatch&, std::span<const std::uint8_t>, bool);                    \
  template double train_step(Model<T>&, AdamState<T>&, const ClipBatch&, double, Rng&, double);                    \
  template Tensor<T> fused_context(const Model<T>&, const Clip&);                                                  \
  template SequenceScore sequence_log_prob(const Model<T>&, std::span<const T>, const Comment&);                   \
  template std::vector<std::vector<double>> teacher_forced_log_probs(const Model<T>&, std::span<const Clip>,       \
                                                                     std::size_t);

DMF_INSTANTIATE_DECODER(float)
DMF_INSTANTIATE_DECODER(double)

}  // namespace dmf
