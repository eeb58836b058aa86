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
#include <string>
#include <vector>

#include "dmf/corpus.hpp"
#include "dmf/rng.hpp"

namespace dmf {

/// Parameters of the synthetic multimodal corpus.
///
/// Each video shows a colored disk on a dark background. The disk's hue
/// drifts as a random walk and its position bounces around the frame; the
/// hue bucket (4 buckets) is the visual signal. Comments arrive as a Poisson
/// process and follow a 2-state Markov "thread" (hype / doubt). A comment
/// is unconditioned chatter with probability noise_prob; otherwise its
/// template is drawn from the set keyed by (hue bucket at that second,
/// thread state). Neither signal alone determines a comment.
struct SceneSpec {
  std::uint64_t seed = 1;
  std::size_t num_videos = 12;   // all frame-bearing videos, test included
  std::size_t test_videos = 2;   // trailing videos that form the test split
  std::size_t ref_videos = 8;    // comment-only videos for the reference pool
  std::size_t video_length_s = 60;
  std::size_t channels = 3;
  std::size_t height = 18;
  std::size_t width = 32;
  double comment_rate = 2.0;     // comments per second
  double thread_stay = 0.9;      // probability the thread keeps its state
  double noise_prob = 0.2;
  double hue_step = 0.02;        // per-second hue drift magnitude
  std::size_t frames_per_clip = 5;
  std::size_t context_comments = 5;
  std::size_t vocab_max = 256;

  // Full-size frames (3 x 72 x 128).
  static SceneSpec full_resolution();
};

inline constexpr int kHueBuckets = 4;
inline constexpr int kThreadStates = 2;

// Ground truth for one generated comment.
struct CommentTruth {
  int hue_bucket = 0;
  int thread_state = 0;
  int template_id = 0;  // index into the grammar; noise templates come last
  bool noise = false;
};

struct SyntheticCorpus {
  std::vector<Clip> train;
  std::vector<Clip> test;
  std::vector<CommentTruth> train_truth;  // truth of each clip's target
  std::vector<CommentTruth> test_truth;
  std::vector<TokenList> references;
  Vocabulary vocab;
  std::size_t frames = 0;
  std::size_t comments = 0;
  std::size_t skipped = 0;
};

SyntheticCorpus generate_corpus(const SceneSpec& scene);

// Writes train.jsonl, test.jsonl, vocab.txt, refs.txt and frames/ into dir.
void write_corpus(const SyntheticCorpus& corpus, const std::string& dir);

// Number of templates in the grammar, noise templates included.
int num_templates();
// Tokens of a grammar template for a given hue bucket.
TokenList template_tokens(int template_id, int hue_bucket);

// Thread-state chain of the given length starting from a uniform state.
std::vector<int> sample_thread_chain(Rng& rng, std::size_t length, double stay);

}  // namespace dmf
