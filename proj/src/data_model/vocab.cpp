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

#include "dmf/vocab.hpp"

#include <algorithm>

#include "dmf/binary_io.hpp"
#include "dmf/error.hpp"

namespace dmf {

namespace {

constexpr std::string_view kReserved[] = {"<pad>", "<unk>", "<bos>", "<eos>"};

bool is_reserved(std::string_view token) {
  return std::find(std::begin(kReserved), std::end(kReserved), token) != std::end(kReserved);
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

Vocabulary::Vocabulary(std::size_t max_size) : max_size_(max_size) {
  if (max_size < kNumReserved) {
    throw DataError("vocabulary max_size must be at least " + std::to_string(kNumReserved));
  }
  for (std::string_view r : kReserved) {
    index_.emplace(std::string(r), static_cast<TokenId>(tokens_.size()));
    tokens_.emplace_back(r);
  }
}

TokenId Vocabulary::add(std::string_view token) {
  if (token.empty()) throw DataError("vocabulary: empty token");
  if (std::any_of(token.begin(), token.end(), is_space)) {
    throw DataError("vocabulary: token contains whitespace: '" + std::string(token) + "'");
  }
  if (index_.count(std::string(token))) throw DataError("vocabulary: duplicate token '" + std::string(token) + "'");
  if (tokens_.size() >= max_size_) throw DataError("vocabulary: full at " + std::to_string(max_size_) + " entries");
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnk); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DataError("vocabulary: id " + std::to_string(id) + " out of range for size " + std::to_string(size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

TokenList Vocabulary::decode(std::span<const TokenId> ids) const {
  TokenList out;
  out.reserve(ids.size());
  for (TokenId i : ids) out.push_back(token(i));
  return out;
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (std::size_t i = kNumReserved; i < tokens_.size(); ++i) {
    out += tokens_[i];
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::from_text(std::string_view text, std::size_t max_size) {
  Vocabulary v(max_size);
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) throw ParseError("vocabulary file: empty token", line_no);
    if (is_reserved(line)) throw ParseError("vocabulary file: reserved token '" + std::string(line) + "'", line_no);
    try {
      v.add(line);
    } catch (const DataError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return v;
}

void Vocabulary::save(const std::string& path) const { binary::write_file(path, to_text()); }

Vocabulary Vocabulary::load(const std::string& path, std::size_t max_size) {
  return from_text(binary::read_file(path), max_size);
}

Vocabulary build_vocab(std::span<const TokenList> comments, std::size_t max_size) {
  if (comments.empty()) throw DataError("build_vocab: empty comment stream");
  struct Stat {
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Stat> stats;
  std::vector<std::string> order;
  for (const TokenList& c : comments) {
    for (const std::string& t : c) {
      if (is_reserved(t)) continue;
      auto [it, inserted] = stats.try_emplace(t, Stat{0, order.size()});
      if (inserted) order.push_back(t);
      ++it->second.count;
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    const Stat& sa = stats[a];
    const Stat& sb = stats[b];
    if (sa.count != sb.count) return sa.count > sb.count;
    return sa.first < sb.first;
  });
  Vocabulary v(max_size);
  for (const std::string& t : order) {
    if (v.size() >= max_size) break;
    v.add(t);
  }
  return v;
}

TokenList split_tokens(std::string_view line) {
  TokenList out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace dmf
