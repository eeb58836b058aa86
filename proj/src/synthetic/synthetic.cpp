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

#include "dmf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "dmf/binary_io.hpp"
#include "dmf/error.hpp"

namespace dmf {

namespace {

constexpr const char* kColorWords[kHueBuckets] = {"red", "green", "blue", "purple"};

// Patterns per thread state; "@" is replaced by the hue bucket's color word.
const std::vector<std::vector<TokenList>> kPatterns = {
    {
        {"wow", "@", "so", "cool"},
        {"omg", "that", "@", "is", "epic"},
        {"love", "the", "@", "vibe"},
    },
    {
        {"why", "is", "it", "@"},
        {"hmm", "not", "sure", "about", "@"},
        {"is", "that", "really", "@", "?"},
    },
};

const std::vector<TokenList> kNoise = {
    {"lol"},           {"haha", "lol"}, {"first"},       {"666"},
    {"nice", "episode"}, {"hello", "everyone"}, {"same", "here"}, {"agreed"},
};

constexpr int kPatternsPerState = 3;
constexpr int kKeyedTemplates = kHueBuckets * kThreadStates * kPatternsPerState;

struct RawComment {
  double t = 0;
  TokenList tokens;
  CommentTruth truth;
};

struct RawVideo {
  std::vector<FramePtr> frames;
  std::vector<RawComment> comments;
};

void hsv_to_rgb(double h, double s, double v, double rgb[3]) {
  h = h - std::floor(h);
  const double x = h * 6.0;
  const int sector = static_cast<int>(x) % 6;
  const double f = x - std::floor(x);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  const double table[6][3] = {{v, t, p}, {q, v, p}, {p, v, t}, {p, q, v}, {t, p, v}, {v, p, q}};
  for (int i = 0; i < 3; ++i) rgb[i] = table[sector][i];
}

int hue_bucket_of(double hue) {
  const double h = hue - std::floor(hue);
  return std::min(kHueBuckets - 1, static_cast<int>(h * kHueBuckets));
}

Tensor<float> render(const SceneSpec& scene, double hue, double cx, double cy, Rng& rng) {
  const std::size_t c = scene.channels, h = scene.height, w = scene.width;
  Tensor<float> px({c, h, w});
  double rgb[3];
  hsv_to_rgb(hue, 0.9, 0.95, rgb);
  const double radius = 0.3 * static_cast<double>(std::min(h, w));
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double dx = static_cast<double>(x) + 0.5 - cx, dy = static_cast<double>(y) + 0.5 - cy;
      const bool inside = dx * dx + dy * dy <= radius * radius;
      const double noise = rng.uniform(-0.03, 0.03);
      double value[3];
      for (int k = 0; k < 3; ++k) value[k] = (inside ? rgb[k] : 0.15) + noise;
      if (c == 1) {
        const double lum = 0.299 * value[0] + 0.587 * value[1] + 0.114 * value[2];
        px[y * w + x] = static_cast<float>(std::clamp(lum, 0.0, 1.0));
      } else {
        for (std::size_t k = 0; k < c; ++k) {
          px[(k * h + y) * w + x] = static_cast<float>(std::clamp(value[k % 3], 0.0, 1.0));
        }
      }
    }
  }
  return px;
}

RawComment make_comment(const SceneSpec& scene, double t, int bucket, int state, Rng& rng) {
  RawComment c;
  c.t = t;
  c.truth.hue_bucket = bucket;
  c.truth.thread_state = state;
  if (rng.bernoulli(scene.noise_prob)) {
    const int k = static_cast<int>(rng.below(kNoise.size()));
    c.truth.noise = true;
    c.truth.template_id = kKeyedTemplates + k;
  } else {
    const int k = static_cast<int>(rng.below(kPatternsPerState));
    c.truth.template_id = (bucket * kThreadStates + state) * kPatternsPerState + k;
  }
  c.tokens = template_tokens(c.truth.template_id, bucket);
  return c;
}

RawVideo make_video(const SceneSpec& scene, Rng rng, bool with_frames) {
  RawVideo video;
  const std::size_t len = scene.video_length_s;
  // Hue walk: per-video drift direction plus jitter.
  std::vector<double> hue(len);
  double hv = rng.uniform();
  const double drift = (rng.bernoulli(0.5) ? 1.0 : -1.0) * scene.hue_step;
  double cx = rng.uniform(0.3, 0.7) * static_cast<double>(scene.width);
  double cy = rng.uniform(0.3, 0.7) * static_cast<double>(scene.height);
  double vx = rng.uniform(-1.0, 1.0), vy = rng.uniform(-0.6, 0.6);
  for (std::size_t s = 0; s < len; ++s) {
    hue[s] = hv;
    if (with_frames) {
      auto f = std::make_shared<Frame>();
      f->pixels = render(scene, hv, cx, cy, rng);
      f->timestamp = static_cast<double>(s);
      video.frames.push_back(std::move(f));
    }
    hv += drift + rng.uniform(-0.5, 0.5) * scene.hue_step;
    hv -= std::floor(hv);
    cx += vx;
    cy += vy;
    if (cx < 0 || cx > static_cast<double>(scene.width)) vx = -vx;
    if (cy < 0 || cy > static_cast<double>(scene.height)) vy = -vy;
  }
  // Poisson arrivals, topped up so every anchor can see m + 1 comments.
  std::vector<double> times;
  for (double t = rng.exponential(scene.comment_rate); t < static_cast<double>(len); t += rng.exponential(scene.comment_rate)) {
    times.push_back(t);
  }
  while (times.size() < scene.context_comments + 1) times.push_back(rng.uniform(0.0, static_cast<double>(len)));
  std::sort(times.begin(), times.end());
  const std::vector<int> states = sample_thread_chain(rng, times.size(), scene.thread_stay);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const std::size_t sec = std::min(len - 1, static_cast<std::size_t>(std::lround(times[i])));
    video.comments.push_back(make_comment(scene, times[i], hue_bucket_of(hue[sec]), states[i], rng));
  }
  return video;
}

std::string padded(std::size_t v, int width) {
  std::string s = std::to_string(v);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

}  // namespace

SceneSpec SceneSpec::full_resolution() {
  SceneSpec s;
  s.height = 72;
  s.width = 128;
  return s;
}

int num_templates() { return kKeyedTemplates + static_cast<int>(kNoise.size()); }

TokenList template_tokens(int template_id, int hue_bucket) {
  if (template_id < 0 || template_id >= num_templates()) {
    throw Error("template id " + std::to_string(template_id) + " out of range");
  }
  if (template_id >= kKeyedTemplates) return kNoise[static_cast<std::size_t>(template_id - kKeyedTemplates)];
  const int bucket = template_id / (kThreadStates * kPatternsPerState);
  const int state = (template_id / kPatternsPerState) % kThreadStates;
  const int k = template_id % kPatternsPerState;
  if (bucket != hue_bucket) throw Error("template " + std::to_string(template_id) + " belongs to another hue bucket");
  TokenList out = kPatterns[static_cast<std::size_t>(state)][static_cast<std::size_t>(k)];
  for (auto& t : out)
    if (t == "@") t = kColorWords[bucket];
  return out;
}

std::vector<int> sample_thread_chain(Rng& rng, std::size_t length, double stay) {
  std::vector<int> states;
  states.reserve(length);
  int s = static_cast<int>(rng.below(kThreadStates));
  for (std::size_t i = 0; i < length; ++i) {
    if (i > 0 && !rng.bernoulli(stay)) s = 1 - s;
    states.push_back(s);
  }
  return states;
}

SyntheticCorpus generate_corpus(const SceneSpec& scene) {
  if (scene.num_videos == 0 || scene.test_videos >= scene.num_videos) {
    throw DataError("synthetic corpus needs num_videos > test_videos (got " + std::to_string(scene.num_videos) + " and " +
                    std::to_string(scene.test_videos) + ")");
  }
  if (scene.video_length_s < scene.frames_per_clip) throw DataError("synthetic corpus: videos shorter than one clip");
  if (scene.channels != 1 && scene.channels != 3) throw DataError("synthetic corpus: channels must be 1 or 3");
  if (scene.height == 0 || scene.width == 0) throw DataError("synthetic corpus: frame size must be positive");

  const Rng root(scene.seed);
  std::vector<RawVideo> videos;
  for (std::size_t v = 0; v < scene.num_videos; ++v) {
    RawVideo video = make_video(scene, root.fork(v), true);
    for (auto& f : video.frames) {
      auto named = std::make_shared<Frame>(*f);
      named->name = "v" + padded(v, 3) + "_t" + padded(static_cast<std::size_t>(f->timestamp), 4);
      f = std::move(named);
    }
    videos.push_back(std::move(video));
  }

  SyntheticCorpus out;
  const std::size_t train_videos = scene.num_videos - scene.test_videos;
  std::vector<TokenList> stream;
  for (std::size_t v = 0; v < train_videos; ++v)
    for (const RawComment& c : videos[v].comments) stream.push_back(c.tokens);
  out.vocab = build_vocab(stream, scene.vocab_max);

  for (std::size_t v = 0; v < scene.num_videos; ++v) {
    const RawVideo& video = videos[v];
    std::vector<Comment> comments;
    for (const RawComment& c : video.comments) comments.push_back({out.vocab.encode(c.tokens), c.t});
    AssembleResult assembled = assemble_clips(video.frames, comments, scene.frames_per_clip, scene.context_comments);
    out.frames += video.frames.size();
    out.comments += comments.size();
    out.skipped += assembled.skipped;
    const bool is_test = v >= train_videos;
    for (Clip& clip : assembled.clips) {
      const auto it = std::find_if(video.comments.begin(), video.comments.end(),
                                   [&](const RawComment& c) { return c.t == clip.target.timestamp; });
      (is_test ? out.test_truth : out.train_truth).push_back(it->truth);
      (is_test ? out.test : out.train).push_back(std::move(clip));
    }
  }
  for (std::size_t r = 0; r < scene.ref_videos; ++r) {
    RawVideo video = make_video(scene, root.fork(scene.num_videos + r), false);
    for (const RawComment& c : video.comments) out.references.push_back(c.tokens);
  }
  return out;
}

void write_corpus(const SyntheticCorpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_corpus((fs::path(dir) / "train.jsonl").string(), corpus.train, corpus.vocab);
  save_corpus((fs::path(dir) / "test.jsonl").string(), corpus.test, corpus.vocab);
  std::ostringstream refs;
  for (const TokenList& r : corpus.references) {
    for (std::size_t i = 0; i < r.size(); ++i) refs << (i ? " " : "") << r[i];
    refs << '\n';
  }
  binary::write_file((fs::path(dir) / "refs.txt").string(), refs.str());
}

}  // namespace dmf
