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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dmf/corpus.hpp"
#include "dmf/error.hpp"

namespace dmf {

namespace {

constexpr double kFrameSpacingTolerance = 1e-6;

// Strict weak order on comments that does not depend on input order.
bool comment_less(const Comment& a, const Comment& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.tokens < b.tokens;
}

}  // namespace

const Comment& Clip::nearest_context() const {
  if (context.empty()) throw DataError("clip has no context comments");
  const double anchor = anchor_time();
  const Comment* best = &context.front();
  for (const Comment& c : context) {
    const double d = std::abs(c.timestamp - anchor);
    const double bd = std::abs(best->timestamp - anchor);
    if (d < bd || (d == bd && comment_less(c, *best))) best = &c;
  }
  return *best;
}

bool operator==(const Clip& a, const Clip& b) {
  if (a.frames.size() != b.frames.size() || !(a.context == b.context) || !(a.target == b.target)) return false;
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    if (!(*a.frames[i] == *b.frames[i])) return false;
  }
  return true;
}

AssembleResult assemble_clips(std::span<const FramePtr> frames_in, std::span<const Comment> comments_in,
                              std::size_t n, std::size_t m) {
  if (n == 0) throw DataError("assemble_clips: n must be at least 1");
  std::vector<FramePtr> frames(frames_in.begin(), frames_in.end());
  std::stable_sort(frames.begin(), frames.end(),
                   [](const FramePtr& a, const FramePtr& b) { return a->timestamp < b->timestamp; });
  std::vector<Comment> comments(comments_in.begin(), comments_in.end());
  std::sort(comments.begin(), comments.end(), comment_less);
  for (const Comment& c : comments) {
    if (c.tokens.empty()) throw DataError("assemble_clips: empty comment at t=" + std::to_string(c.timestamp));
  }

  AssembleResult result;
  std::vector<std::size_t> order(comments.size());
  for (std::size_t a = n - 1; a < frames.size(); ++a) {
    bool consecutive = true;
    for (std::size_t i = a + 1 - n; i < a; ++i) {
      const double gap = frames[i + 1]->timestamp - frames[i]->timestamp;
      if (std::abs(gap - 1.0) > kFrameSpacingTolerance) consecutive = false;
    }
    if (!consecutive || comments.size() < m + 1) {
      ++result.skipped;
      continue;
    }
    const double anchor = frames[a]->timestamp;
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Comments are time-sorted, so index order breaks distance ties toward
    // the earlier comment.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return std::abs(comments[x].timestamp - anchor) < std::abs(comments[y].timestamp - anchor);
    });
    Clip clip;
    clip.frames.assign(frames.begin() + static_cast<std::ptrdiff_t>(a + 1 - n),
                       frames.begin() + static_cast<std::ptrdiff_t>(a + 1));
    clip.target = comments[order[0]];
    std::vector<std::size_t> ctx(order.begin() + 1, order.begin() + 1 + static_cast<std::ptrdiff_t>(m));
    std::sort(ctx.begin(), ctx.end());
    for (std::size_t i : ctx) clip.context.push_back(comments[i]);
    result.clips.push_back(std::move(clip));
  }
  return result;
}

}  // namespace dmf
