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
#include <string_view>
#include <vector>

#include "dmf/corpus.hpp"
#include "dmf/model.hpp"
#include "dmf/rng.hpp"

namespace dmf {

enum class DecodeMode { kGreedy, kBeam, kSample };

struct GenerateOptions {
  DecodeMode mode = DecodeMode::kGreedy;
  std::size_t beam_width = 4;
  double temperature = 1.0;  // sampling only; <= 0 means argmax
  std::size_t max_len = 20;  // tokens before EOS
};

// "greedy", "beam" or "beam:K", "sample" or "sample:TEMP".
GenerateOptions parse_decode_mode(std::string_view text);

struct Generation {
  std::vector<TokenId> tokens;  // EOS excluded
  double log_prob = 0;          // natural log; includes EOS when emitted
  bool finished = false;        // EOS was emitted before max_len
};

/// Decodes from BOS until EOS or max_len tokens. Beam search keeps the
/// beam_width best partial hypotheses by summed log-probability; a
/// hypothesis that emits EOS leaves the beam, and the answer is the
/// finished (or max_len) hypothesis with the best log-prob per scored
/// token. Ties go to the earlier hypothesis and the lower token id.
/// Sampling draws from softmax(logits / temperature) using rng.
template <typename T>
Generation generate(const Model<T>& model, const Clip& clip, const GenerateOptions& options, Rng& rng);
template <typename T>
Generation generate(const Model<T>& model, const Clip& clip, const GenerateOptions& options);

}  // namespace dmf
