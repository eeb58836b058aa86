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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dmf {

using TokenId = std::int32_t;
using TokenList = std::vector<std::string>;

/// Token <-> id bijection. Ids 0..3 are the reserved PAD, UNK, BOS and EOS;
/// corpus words follow densely from 4. `max_size` bounds the total size,
/// reserved ids included.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kBos = 2;
  static constexpr TokenId kEos = 3;
  static constexpr std::size_t kNumReserved = 4;
  static constexpr std::size_t kDefaultMaxSize = 34100;

  explicit Vocabulary(std::size_t max_size = kDefaultMaxSize);

  // Appends a new word; returns its id. Throws when full or duplicate.
  TokenId add(std::string_view token);

  std::optional<TokenId> find(std::string_view token) const;
  // Unknown words map to UNK.
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  TokenList decode(std::span<const TokenId> ids) const;

  std::size_t size() const { return tokens_.size(); }
  std::size_t max_size() const { return max_size_; }

  // One word per line, in id order starting at id 4.
  std::string to_text() const;
  static Vocabulary from_text(std::string_view text, std::size_t max_size = kDefaultMaxSize);
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path, std::size_t max_size = kDefaultMaxSize);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::size_t max_size_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Ranks words by frequency, ties broken by first occurrence, and keeps the
// top max_size - 4. Reserved spellings in the stream are ignored.
Vocabulary build_vocab(std::span<const TokenList> comments, std::size_t max_size = Vocabulary::kDefaultMaxSize);

// Splits on ASCII whitespace.
TokenList split_tokens(std::string_view line);

}  // namespace dmf
