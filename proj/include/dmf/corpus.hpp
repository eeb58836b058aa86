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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dmf/tensor.hpp"
#include "dmf/vocab.hpp"

namespace dmf {

// A tokenized live comment. Tokens exclude BOS/EOS and are never empty.
struct Comment {
  std::vector<TokenId> tokens;
  double timestamp = 0;  // seconds from video start

  friend bool operator==(const Comment&, const Comment&) = default;
};

// One video frame, pixels [C x H x W] in [0, 1]. `name` is the blob stem used
// on disk and does not take part in equality.
struct Frame {
  Tensor<float> pixels;
  double timestamp = 0;
  std::string name;

  friend bool operator==(const Frame& a, const Frame& b) {
    return a.pixels == b.pixels && a.timestamp == b.timestamp;
  }
};

using FramePtr = std::shared_ptr<const Frame>;

/// One training example: n consecutive frames (1 s apart) ending at the
/// anchor frame, m context comments in time order, and the target comment,
/// which never appears in the context.
struct Clip {
  std::vector<FramePtr> frames;
  std::vector<Comment> context;
  Comment target;

  double anchor_time() const { return frames.back()->timestamp; }
  // Context comment closest in time to the anchor frame (earlier on ties).
  const Comment& nearest_context() const;

  friend bool operator==(const Clip& a, const Clip& b);
};

struct AssembleResult {
  std::vector<Clip> clips;
  // Anchors with a full frame window that were dropped: a gap in the window
  // or fewer than m + 1 comments.
  std::size_t skipped = 0;
};

/// Builds one clip per anchor frame that has n - 1 predecessors. The target
/// is the comment nearest in |dt| to the anchor; the context is the next m
/// nearest. Distance ties go to the earlier comment. Output depends only on
/// the multiset of inputs, not their order.
AssembleResult assemble_clips(std::span<const FramePtr> frames, std::span<const Comment> comments, std::size_t n,
                              std::size_t m);

std::string encode_frame_blob(const Frame& frame);
Frame decode_frame_blob(std::string_view bytes, const std::string& context);

struct Corpus {
  std::vector<Clip> clips;
  Vocabulary vocab;
};

// Manifest: JSON lines, one clip per line:
//   {"frames": [paths], "frame_t": [seconds], "context": [{"t": s, "tokens": [..]}],
//    "target": {"t": s, "tokens": [..]}}
// Frame paths are relative to the manifest's directory. "frame_t" is
// optional; without it frames end at the target time, 1 s apart.
// The vocabulary defaults to vocab.txt beside the manifest.
Corpus load_corpus(const std::string& manifest_path, const std::string& vocab_path = "");

// Writes the manifest, the vocabulary (vocab.txt beside the manifest) and
// one blob per distinct frame under frames/ next to the manifest. Frames
// keep their `name` when set.
void save_corpus(const std::string& manifest_path, std::span<const Clip> clips, const Vocabulary& vocab);

// Every token list in a manifest, context first, then target, line by line.
std::vector<TokenList> manifest_comments(const std::string& manifest_path);

// Throws DataError if any clip token id is outside the vocabulary.
void check_vocab_coverage(std::span<const Clip> clips, const Vocabulary& vocab);

}  // namespace dmf
