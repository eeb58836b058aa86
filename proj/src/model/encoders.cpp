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

#include "dmf/encoders.hpp"

#include <algorithm>

#include "dmf/error.hpp"

namespace dmf {

namespace {

template <typename T>
Tensor<T> as_vector(const Tensor<T>& row) {
  return Tensor<T>({row.size()}, std::vector<T>(row.data().begin(), row.data().end()));
}

template <typename T>
void require_part(const Var<T>& v, const char* what) {
  if (!v.valid()) throw Error(std::string("this model variant has no ") + what);
}

}  // namespace

TokenBatch TokenBatch::from(std::span<const std::vector<TokenId>* const> seqs) {
  TokenBatch b;
  b.rows = seqs.size();
  for (const auto* s : seqs) {
    if (s->empty()) throw DataError("cannot batch an empty token sequence");
    b.max_len = std::max(b.max_len, s->size());
    b.lengths.push_back(s->size());
  }
  b.ids.assign(b.rows * b.max_len, Vocabulary::kPad);
  for (std::size_t r = 0; r < b.rows; ++r) std::copy(seqs[r]->begin(), seqs[r]->end(), b.ids.begin() + r * b.max_len);
  return b;
}

template <typename T>
Tensor<T> stack_frames(std::span<const Frame* const> frames, const ModelConfig& config) {
  const Shape want{config.frame_channels, config.frame_height, config.frame_width};
  const std::size_t per = shape_numel(want);
  if (frames.empty()) throw DataError("stack_frames: no frames");
  std::vector<T> data(frames.size() * per);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i]->pixels.shape() != want) {
      throw DimensionError("frame shape " + shape_to_string(frames[i]->pixels.shape()) + " does not match model " +
                           shape_to_string(want));
    }
    std::copy(frames[i]->pixels.data().begin(), frames[i]->pixels.data().end(), data.begin() + i * per);
  }
  return Tensor<T>({frames.size(), want[0], want[1], want[2]}, std::move(data));
}

template <typename T>
Var<T> cnn_forward(const BoundModel<T>& m, Var<T> images) {
  Var<T> x = images;
  for (std::size_t i = 0; i < 3; ++i) x = relu(conv2d(x, m.conv_weight[i], m.conv_bias[i], 2, 1));
  const std::size_t n = x.shape()[0];
  x = reshape(x, {n, x.size() / n});
  for (std::size_t i = 0; i < 3; ++i) {
    x = affine(x, m.fc_weight[i], m.fc_bias[i]);
    if (i < 2) x = relu(x);
  }
  return x;
}

template <typename T>
Var<T> gru_sequence(const GruVars<T>& weights, std::span<const Var<T>> steps, std::size_t hidden) {
  if (steps.empty()) throw DataError("GRU over an empty sequence");
  Graph<T>& g = steps.front().graph();
  Var<T> h = g.constant(Tensor<T>({steps.front().shape()[0], hidden}));
  for (const Var<T>& x : steps) h = gru_cell(x, h, weights);
  return h;
}

template <typename T>
Var<T> word_gru_forward(const BoundModel<T>& m, Graph<T>& g, const TokenBatch& batch) {
  require_part(m.word_gru.input_weights, "word-level GRU");
  const std::size_t hidden = m.model->config().enc_hidden;
  Var<T> h = g.constant(Tensor<T>({batch.rows, hidden}));
  std::vector<TokenId> ids(batch.rows);
  std::vector<std::uint8_t> live(batch.rows);
  for (std::size_t t = 0; t < batch.max_len; ++t) {
    bool all_live = true;
    for (std::size_t r = 0; r < batch.rows; ++r) {
      ids[r] = batch.ids[r * batch.max_len + t];
      live[r] = t < batch.lengths[r];
      all_live = all_live && live[r];
    }
    Var<T> next = gru_cell(embedding(m.embedding, std::span<const TokenId>(ids)), h, m.word_gru);
    h = all_live ? next : select_rows(std::span<const std::uint8_t>(live), next, h);
  }
  return h;
}

template <typename T>
Tensor<T> encode_frame(const Model<T>& model, const Frame& frame) {
  Graph<T> g;
  const BoundModel<T> m = bind_frozen(g, model);
  const Frame* f = &frame;
  Var<T> v = cnn_forward(m, g.constant(stack_frames<T>(std::span<const Frame* const>(&f, 1), model.config())));
  return as_vector(v.value());
}

template <typename T>
Tensor<T> encode_video(const Model<T>& model, std::span<const FramePtr> frames) {
  if (frames.empty()) throw DataError("encode_video: no frames");
  Graph<T> g;
  const BoundModel<T> m = bind_frozen(g, model);
  require_part(m.frame_gru.input_weights, "frame-level GRU");
  std::vector<const Frame*> raw;
  for (const FramePtr& f : frames) raw.push_back(f.get());
  Var<T> all = cnn_forward(m, g.constant(stack_frames<T>(raw, model.config())));
  std::vector<Var<T>> steps;
  for (std::size_t i = 0; i < raw.size(); ++i) steps.push_back(slice_rows(all, i, 1));
  return as_vector(gru_sequence<T>(m.frame_gru, steps, model.config().enc_hidden).value());
}

template <typename T>
Tensor<T> encode_comment(const Model<T>& model, const Comment& comment) {
  if (comment.tokens.empty()) throw DataError("encode_comment: empty comment");
  Graph<T> g;
  const BoundModel<T> m = bind_frozen(g, model);
  const std::vector<TokenId>* seq = &comment.tokens;
  const TokenBatch batch = TokenBatch::from(std::span<const std::vector<TokenId>* const>(&seq, 1));
  return as_vector(word_gru_forward(m, g, batch).value());
}

template <typename T>
Tensor<T> encode_context(const Model<T>& model, std::span<const Comment> comments) {
  if (comments.empty()) throw DataError("encode_context: no comments");
  Graph<T> g;
  const BoundModel<T> m = bind_frozen(g, model);
  require_part(m.sentence_gru.input_weights, "sentence-level GRU");
  std::vector<const std::vector<TokenId>*> seqs;
  for (const Comment& c : comments) seqs.push_back(&c.tokens);
  Var<T> vecs = word_gru_forward(m, g, TokenBatch::from(seqs));
  std::vector<Var<T>> steps;
  for (std::size_t i = 0; i < comments.size(); ++i) steps.push_back(slice_rows(vecs, i, 1));
  return as_vector(gru_sequence<T>(m.sentence_gru, steps, model.config().enc_hidden).value());
}

#define DMF_INSTANTIATE_ENCODERS(T)                                                          \
  template Tensor<T> stack_frames<T>(std::span<const Frame* const>, const ModelConfig&);    \
  template Var<T> cnn_forward(const BoundModel<T>&, Var<T>);                                 \
  template Var<T> gru_sequence(const GruVars<T>&, std::span<const Var<T>>, std::size_t);     \
  template Var<T> word_gru_forward(const BoundModel<T>&, Graph<T>&, const TokenBatch&);      \
  template Tensor<T> encode_frame(const Model<T>&, const Frame&);                            \
  template Tensor<T> encode_video(const Model<T>&, std::span<const FramePtr>);               \
  template Tensor<T> encode_comment(const Model<T>&, const Comment&);                        \
  template Tensor<T> encode_context(const Model<T>&, std::span<const Comment>);

DMF_INSTANTIATE_ENCODERS(float)
DMF_INSTANTIATE_ENCODERS(double)

}  // namespace dmf
