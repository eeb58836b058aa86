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
#include <map>

#include "dmf/error.hpp"
#include "dmf/metrics.hpp"

namespace dmf {

namespace {

constexpr std::size_t kMaxOrder = 4;

std::string gram_key(std::span<const TokenId> seq, std::size_t start, std::size_t n) {
  return std::string(reinterpret_cast<const char*>(seq.data() + start), n * sizeof(TokenId));
}

std::map<std::string, int> count_grams(std::span<const TokenId> seq, std::size_t n) {
  std::map<std::string, int> counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) ++counts[gram_key(seq, i, n)];
  return counts;
}

}  // namespace

double bleu4_sentence(std::span<const TokenId> candidate, std::span<const TokenId> reference) {
  if (candidate.empty()) throw EvalError("bleu4_sentence: empty candidate");
  double log_sum = 0;
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    double precision = 0;
    if (candidate.size() >= n) {
      const auto cand = count_grams(candidate, n);
      const auto ref = count_grams(reference, n);
      int clipped = 0;
      for (const auto& [gram, c] : cand) {
        const auto it = ref.find(gram);
        if (it != ref.end()) clipped += std::min(c, it->second);
      }
      precision = static_cast<double>(clipped) / static_cast<double>(candidate.size() + 1 - n);
    }
    log_sum += std::log(std::max(precision, kBleuEpsilon));
  }
  const double c = static_cast<double>(candidate.size()), r = static_cast<double>(reference.size());
  const double brevity = c < r ? std::exp(1.0 - r / c) : 1.0;
  return brevity * std::exp(log_sum / static_cast<double>(kMaxOrder));
}

ReferenceSet::ReferenceSet(std::vector<TokenSeq> refs) : refs_(std::move(refs)) {
  if (refs_.empty()) throw EvalError("reference set is empty");
  for (std::size_t r = 0; r < refs_.size(); ++r) {
    const TokenSeq& ref = refs_[r];
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      for (std::size_t i = 0; i + n <= ref.size(); ++i) {
        auto& ids = index_[n - 1][gram_key(ref, i, n)];
        if (ids.empty() || ids.back() != r) ids.push_back(static_cast<std::uint32_t>(r));
      }
    }
  }
}

ReferenceSet::Best ReferenceSet::best_exhaustive(std::span<const TokenId> candidate) const {
  Best best{-1.0, 0};
  for (std::size_t r = 0; r < refs_.size(); ++r) {
    const double s = bleu4_sentence(candidate, refs_[r]);
    if (s > best.score) best = {s, r};
  }
  return best;
}

ReferenceSet::Best ReferenceSet::best(std::span<const TokenId> candidate) const {
  if (candidate.empty()) throw EvalError("bleu4_max: empty candidate");
  std::vector<std::uint32_t> pool;
  for (std::size_t k = kMaxOrder; k >= 1; --k) {
    pool.clear();
    for (std::size_t i = 0; i + k <= candidate.size(); ++i) {
      const auto it = index_[k - 1].find(gram_key(candidate, i, k));
      if (it != index_[k - 1].end()) pool.insert(pool.end(), it->second.begin(), it->second.end());
    }
    if (pool.empty()) continue;
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    Best best{-1.0, 0};
    for (std::uint32_t r : pool) {
      const double s = bleu4_sentence(candidate, refs_[r]);
      if (s > best.score) best = {s, r};
    }
    // Upper bound for any reference outside the pool, with slack for rounding.
    const double bound = std::exp(static_cast<double>(kMaxOrder + 1 - k) / kMaxOrder * std::log(kBleuEpsilon));
    if (best.score > bound * (1 + 1e-9)) return best;
  }
  return best_exhaustive(candidate);
}

double bleu4_max(std::span<const TokenId> candidate, const ReferenceSet& refs) { return refs.best(candidate).score; }

}  // namespace dmf
