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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "dmf/binary_io.hpp"
#include "dmf/corpus.hpp"
#include "dmf/error.hpp"

namespace dmf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kFrameMagic = "DMFR";

std::string manifest_dir(const std::string& manifest_path) {
  const fs::path dir = fs::path(manifest_path).parent_path();
  return dir.empty() ? std::string(".") : dir.string();
}

Comment parse_comment(const json& j, const Vocabulary& vocab, std::size_t line) {
  if (!j.is_object() || !j.contains("t") || !j.contains("tokens")) {
    throw ParseError("comment needs \"t\" and \"tokens\"", line);
  }
  Comment c;
  c.timestamp = j.at("t").get<double>();
  if (c.timestamp < 0) throw ParseError("comment timestamp must be >= 0", line);
  const auto tokens = j.at("tokens").get<std::vector<std::string>>();
  if (tokens.empty()) throw ParseError("comment with no tokens", line);
  c.tokens = vocab.encode(tokens);
  return c;
}

json comment_json(const Comment& c, const Vocabulary& vocab) {
  return json{{"t", c.timestamp}, {"tokens", vocab.decode(c.tokens)}};
}

template <typename F>
void for_each_line(const std::string& path, F&& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path + ": malformed JSON: " + e.what(), line_no);
    }
    try {
      fn(j, line_no);
    } catch (const json::exception& e) {
      throw ParseError(path + ": " + e.what(), line_no);
    }
  }
}

}  // namespace

std::string encode_frame_blob(const Frame& frame) {
  const Shape& s = frame.pixels.shape();
  if (s.size() != 3) throw DimensionError("frame pixels must be [C x H x W], got " + shape_to_string(s));
  for (std::size_t d : s) {
    if (d > 0xffff) throw FormatError("frame dimension too large for blob: " + shape_to_string(s));
  }
  binary::Writer w;
  w.bytes(kFrameMagic);
  w.u16(static_cast<std::uint16_t>(s[0]));
  w.u16(static_cast<std::uint16_t>(s[1]));
  w.u16(static_cast<std::uint16_t>(s[2]));
  for (float v : frame.pixels.data()) w.f32(v);
  return w.take();
}

Frame decode_frame_blob(std::string_view bytes, const std::string& context) {
  binary::Reader r(bytes, context);
  if (bytes.size() < kFrameMagic.size() || r.bytes(kFrameMagic.size()) != kFrameMagic) {
    throw FormatError(context + ": bad frame magic (expected \"DMFR\")");
  }
  const std::size_t c = r.u16(), h = r.u16(), w = r.u16();
  if (c != 1 && c != 3) throw FormatError(context + ": frame must have 1 or 3 channels, got " + std::to_string(c));
  if (h == 0 || w == 0) throw FormatError(context + ": zero frame dimension");
  if (r.remaining() != c * h * w * 4) {
    throw FormatError(context + ": frame payload has " + std::to_string(r.remaining()) + " bytes, expected " +
                      std::to_string(c * h * w * 4));
  }
  std::vector<float> px(c * h * w);
  for (float& v : px) v = r.f32();
  Frame f;
  f.pixels = Tensor<float>({c, h, w}, std::move(px));
  return f;
}

Corpus load_corpus(const std::string& manifest_path, const std::string& vocab_path) {
  const std::string dir = manifest_dir(manifest_path);
  const std::string vpath = vocab_path.empty() ? (fs::path(dir) / "vocab.txt").string() : vocab_path;
  if (!fs::exists(vpath)) throw DataError("missing vocabulary file " + vpath + " (see build-vocab)");
  Corpus corpus{{}, Vocabulary::load(vpath)};

  // Frames shared between clips are loaded once.
  std::map<std::string, std::shared_ptr<Frame>> cache;
  Shape frame_shape;
  for_each_line(manifest_path, [&](const json& j, std::size_t line_no) {
    if (!j.is_object() || !j.contains("frames") || !j.contains("context") || !j.contains("target")) {
      throw ParseError(manifest_path + ": clip needs \"frames\", \"context\" and \"target\"", line_no);
    }
    Clip clip;
    clip.target = parse_comment(j.at("target"), corpus.vocab, line_no);
    for (const json& c : j.at("context")) clip.context.push_back(parse_comment(c, corpus.vocab, line_no));
    const auto paths = j.at("frames").get<std::vector<std::string>>();
    if (paths.empty()) throw ParseError(manifest_path + ": clip with no frames", line_no);
    std::vector<double> times;
    if (j.contains("frame_t")) {
      times = j.at("frame_t").get<std::vector<double>>();
      if (times.size() != paths.size()) throw ParseError(manifest_path + ": frame_t length differs from frames", line_no);
    } else {
      for (std::size_t i = 0; i < paths.size(); ++i) {
        times.push_back(clip.target.timestamp - static_cast<double>(paths.size() - 1 - i));
      }
    }
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const std::string full = (fs::path(dir) / paths[i]).string();
      const std::string key = full + "@" + std::to_string(times[i]);
      auto it = cache.find(key);
      if (it == cache.end()) {
        if (!fs::exists(full)) throw DataError(manifest_path + " line " + std::to_string(line_no) + ": missing frame file " + full);
        auto f = std::make_shared<Frame>(decode_frame_blob(binary::read_file(full), full));
        f->timestamp = times[i];
        f->name = fs::path(paths[i]).stem().string();
        if (frame_shape.empty()) frame_shape = f->pixels.shape();
        if (f->pixels.shape() != frame_shape) {
          throw DataError(full + ": frame shape " + shape_to_string(f->pixels.shape()) + " differs from corpus shape " +
                          shape_to_string(frame_shape));
        }
        it = cache.emplace(key, std::move(f)).first;
      }
      clip.frames.push_back(it->second);
    }
    corpus.clips.push_back(std::move(clip));
  });
  return corpus;
}

void save_corpus(const std::string& manifest_path, std::span<const Clip> clips, const Vocabulary& vocab) {
  const fs::path dir = manifest_dir(manifest_path);
  fs::create_directories(dir / "frames");
  vocab.save((dir / "vocab.txt").string());
  check_vocab_coverage(clips, vocab);

  std::map<const Frame*, std::string> names;
  std::map<std::string, const Frame*> owners;
  const std::string stem = fs::path(manifest_path).stem().string();
  std::ostringstream manifest;
  for (const Clip& clip : clips) {
    json paths = json::array(), times = json::array(), context = json::array();
    for (const FramePtr& f : clip.frames) {
      auto it = names.find(f.get());
      if (it == names.end()) {
        std::string name = f->name.empty() ? stem + "_" + std::to_string(names.size()) : f->name;
        auto owner = owners.find(name);
        if (owner != owners.end() && !(*owner->second == *f)) {
          throw DataError("save_corpus: two different frames share the name " + name);
        }
        if (owner == owners.end()) {
          binary::write_file((dir / "frames" / (name + ".dmfr")).string(), encode_frame_blob(*f));
          owners.emplace(name, f.get());
        }
        it = names.emplace(f.get(), "frames/" + name + ".dmfr").first;
      }
      paths.push_back(it->second);
      times.push_back(f->timestamp);
    }
    for (const Comment& c : clip.context) context.push_back(comment_json(c, vocab));
    json line{{"frames", paths}, {"frame_t", times}, {"context", context}, {"target", comment_json(clip.target, vocab)}};
    manifest << line.dump() << '\n';
  }
  binary::write_file(manifest_path, manifest.str());
}

std::vector<TokenList> manifest_comments(const std::string& manifest_path) {
  std::vector<TokenList> out;
  for_each_line(manifest_path, [&](const json& j, std::size_t line_no) {
    if (!j.is_object() || !j.contains("context") || !j.contains("target")) {
      throw ParseError(manifest_path + ": clip needs \"context\" and \"target\"", line_no);
    }
    for (const json& c : j.at("context")) out.push_back(c.at("tokens").get<TokenList>());
    out.push_back(j.at("target").at("tokens").get<TokenList>());
  });
  return out;
}

void check_vocab_coverage(std::span<const Clip> clips, const Vocabulary& vocab) {
  const auto bad = [&](const Comment& c) {
    for (TokenId t : c.tokens) {
      if (t < 0 || static_cast<std::size_t>(t) >= vocab.size()) return true;
    }
    return false;
  };
  for (std::size_t i = 0; i < clips.size(); ++i) {
    bool oob = bad(clips[i].target);
    for (const Comment& c : clips[i].context) oob = oob || bad(c);
    if (oob) {
      throw DataError("clip " + std::to_string(i) + " has token ids outside the vocabulary of size " +
                      std::to_string(vocab.size()));
    }
  }
}

}  // namespace dmf
