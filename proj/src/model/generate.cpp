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

#include "dmf/generate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dmf/error.hpp"
#include "dmf/fusion_decoder.hpp"

namespace dmf {

namespace {

template <typename T>
struct StepResult {
  Tensor<T> hidden;                 // [k x Hd]
  std::vector<std::vector<double>> log_probs;  // k rows of V
};

template <typename T>
StepResult<T> run_step(const Model<T>& model, Tensor<T> hidden, std::span<const TokenId> inputs) {
  Graph<T> g;
  const BoundModel<T> m = bind_frozen(g, model);
  const DecoderStep<T> step = decoder_step(m, g.constant(std::move(hidden)), inputs);
  const std::size_t vocab = model.config().vocab_size;
  StepResult<T> out;
  out.hidden = step.hidden.value();
  const T* logits = step.logits.value().ptr();
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    const T* row = logits + r * vocab;
    const double mx = *std::max_element(row, row + vocab);
    double z = 0;
    for (std::size_t j = 0; j < vocab; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
    const double lz = mx + std::log(z);
    std::vector<double> lp(vocab);
    for (std::size_t j = 0; j < vocab; ++j) lp[j] = static_cast<double>(row[j]) - lz;
    out.log_probs.push_back(std::move(lp));
  }
  return out;
}

template <typename T>
Tensor<T> initial_hidden(const Model<T>& model, const Clip& clip) {
  Tensor<T> h = fused_context(model, clip);
  h.reshape({1, h.size()});
  return h;
}

TokenId argmax(const std::vector<double>& lp) {
  return static_cast<TokenId>(std::max_element(lp.begin(), lp.end()) - lp.begin());
}

template <typename T>
Generation single_path(const Model<T>& model, const Clip& clip, const GenerateOptions& opt, Rng* rng) {
  Generation gen;
  Tensor<T> h = initial_hidden(model, clip);
  TokenId input = Vocabulary::kBos;
  while (gen.tokens.size() < opt.max_len) {
    StepResult<T> step = run_step(model, std::move(h), std::span<const TokenId>(&input, 1));
    h = std::move(step.hidden);
    const std::vector<double>& lp = step.log_probs[0];
    TokenId tok = argmax(lp);
    if (rng && opt.temperature > 0) {
      // Tempered probabilities relative to the best token, then inverse CDF.
      std::vector<double> w(lp.size());
      double total = 0;
      for (std::size_t j = 0; j < lp.size(); ++j) total += w[j] = std::exp((lp[j] - lp[tok]) / opt.temperature);
      double u = rng->uniform() * total;
      for (std::size_t j = 0; j < w.size(); ++j) {
        u -= w[j];
        if (u < 0) {
          tok = static_cast<TokenId>(j);
          break;
        }
      }
    }
    gen.log_prob += lp[static_cast<std::size_t>(tok)];
    if (tok == Vocabulary::kEos) {
      gen.finished = true;
      break;
    }
    gen.tokens.push_back(tok);
    input = tok;
  }
  return gen;
}

template <typename T>
Generation beam_search(const Model<T>& model, const Clip& clip, const GenerateOptions& opt) {
  struct Hyp {
    std::vector<TokenId> tokens;
    double log_prob = 0;
    std::size_t row = 0;  // row in the current hidden tensor
  };
  struct Candidate {
    double score;
    std::size_t hyp;
    TokenId token;
  };
  const std::size_t hd = model.config().dec_hidden;
  std::vector<Hyp> live{Hyp{}};
  std::vector<Generation> finished;
  Tensor<T> hidden = initial_hidden(model, clip);
  std::vector<TokenId> inputs{Vocabulary::kBos};

  while (!live.empty()) {
    StepResult<T> step = run_step(model, std::move(hidden), inputs);
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < live.size(); ++i) {
      const auto& lp = step.log_probs[live[i].row];
      for (std::size_t j = 0; j < lp.size(); ++j) cands.push_back({live[i].log_prob + lp[j], i, static_cast<TokenId>(j)});
    }
    const std::size_t keep = std::min(opt.beam_width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.hyp != b.hyp) return a.hyp < b.hyp;
                        return a.token < b.token;
                      });
    std::vector<Hyp> next;
    std::vector<T> next_hidden;
    inputs.clear();
    for (std::size_t c = 0; c < keep; ++c) {
      const Candidate& cand = cands[c];
      const Hyp& parent = live[cand.hyp];
      if (cand.token == Vocabulary::kEos) {
        finished.push_back({parent.tokens, cand.score, true});
        continue;
      }
      Hyp h{parent.tokens, cand.score, next.size()};
      h.tokens.push_back(cand.token);
      if (h.tokens.size() >= opt.max_len) {
        finished.push_back({h.tokens, h.log_prob, false});
        continue;
      }
      const T* src = step.hidden.ptr() + parent.row * hd;
      next_hidden.insert(next_hidden.end(), src, src + hd);
      inputs.push_back(cand.token);
      next.push_back(std::move(h));
    }
    live = std::move(next);
    if (!live.empty()) hidden = Tensor<T>({live.size(), hd}, std::move(next_hidden));
  }
  auto normalized = [](const Generation& g) {
    return g.log_prob / static_cast<double>(g.tokens.size() + (g.finished ? 1 : 0));
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < finished.size(); ++i) {
    if (normalized(finished[i]) > normalized(finished[best])) best = i;
  }
  return finished[best];
}

}  // namespace

GenerateOptions parse_decode_mode(std::string_view text) {
  GenerateOptions opt;
  const std::size_t colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string arg = colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1));
  try {
    if (head == "greedy" && arg.empty()) {
      opt.mode = DecodeMode::kGreedy;
      return opt;
    }
    if (head == "beam") {
      opt.mode = DecodeMode::kBeam;
      if (!arg.empty()) {
        const long k = std::stol(arg);
        if (k < 1) throw Error("beam width must be at least 1");
        opt.beam_width = static_cast<std::size_t>(k);
      }
      return opt;
    }
    if (head == "sample") {
      opt.mode = DecodeMode::kSample;
      if (!arg.empty()) opt.temperature = std::stod(arg);
      return opt;
    }
  } catch (const std::logic_error&) {
  }
  throw Error("bad decode mode \"" + std::string(text) + "\" (expected greedy, beam:K or sample:TEMP)");
}

template <typename T>
Generation generate(const Model<T>& model, const Clip& clip, const GenerateOptions& options, Rng& rng) {
  if (options.max_len == 0) throw Error("generate: max_len must be at least 1");
  switch (options.mode) {
    case DecodeMode::kGreedy:
      return single_path(model, clip, options, nullptr);
    case DecodeMode::kBeam:
      if (options.beam_width == 0) throw Error("generate: beam width must be at least 1");
      return beam_search(model, clip, options);
    case DecodeMode::kSample:
      return single_path(model, clip, options, &rng);
  }
  throw Error("generate: unknown mode");
}

template <typename T>
Generation generate(const Model<T>& model, const Clip& clip, const GenerateOptions& options) {
  Rng rng(0);
  return generate(model, clip, options, rng);
}

template Generation generate(const Model<float>&, const Clip&, const GenerateOptions&, Rng&);
template Generation generate(const Model<double>&, const Clip&, const GenerateOptions&, Rng&);
template Generation generate(const Model<float>&, const Clip&, const GenerateOptions&);
template Generation generate(const Model<double>&, const Clip&, const GenerateOptions&);

}  // namespace dmf
