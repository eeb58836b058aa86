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
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dmf/vocab.hpp"

namespace dmf {

using TokenSeq = std::vector<TokenId>;

// Floor applied to zero n-gram precisions.
inline constexpr double kBleuEpsilon = 1e-9;

/// Sentence BLEU-4: geometric mean of clipped n-gram precisions for
/// n = 1..4 times the brevity penalty exp(1 - r/c) when c < r. A precision
/// of zero (including orders longer than the candidate) counts as 1e-9.
double bleu4_sentence(std::span<const TokenId> candidate, std::span<const TokenId> reference);

/// Reference pool with inverted n-gram indexes (n = 1..4) for max-BLEU
/// search.
///
/// A reference sharing no k-gram with the candidate has zero clipped counts
/// for every order >= k, so its score is at most 1e-9^((5 - k) / 4). The
/// pruned search walks k = 4..1 and stops at the first order whose indexed
/// candidates beat that bound, which makes it agree exactly with the
/// exhaustive scan; when no order does, it falls back to the scan.
class ReferenceSet {
 public:
  struct Best {
    double score = 0;
    std::size_t index = 0;  // lowest index among equal scores
  };

  explicit ReferenceSet(std::vector<TokenSeq> refs);

  std::size_t size() const { return refs_.size(); }
  const std::vector<TokenSeq>& refs() const { return refs_; }

  Best best_exhaustive(std::span<const TokenId> candidate) const;
  Best best(std::span<const TokenId> candidate) const;

 private:
  std::vector<TokenSeq> refs_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> index_[4];
};

double bleu4_max(std::span<const TokenId> candidate, const ReferenceSet& refs);

// 2^(-mean log2 p) pooled over all tokens of all streams, or the mean of
// per-stream perplexities with per_sentence.
double perplexity(std::span<const std::vector<double>> log2_probs, bool per_sentence = false);

struct EvalReport {
  double bleu4 = 0;       // percent
  double perplexity = 0;
  double avg_length = 0;  // tokens, EOS excluded
  std::size_t n = 0;
  std::map<std::string, std::string> meta;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

/// bleu4: mean over candidates of bleu4_max, times 100. An empty candidate
/// scores 0. Probability streams hold each candidate's scored-token log2
/// probabilities (may be empty to skip perplexity, reported as 0).
EvalReport corpus_report(std::span<const TokenSeq> candidates, std::span<const std::vector<double>> log2_probs,
                         const ReferenceSet& refs);

// Pearson correlation of average ranks. Throws on length mismatch, fewer
// than two points, or a constant input.
double spearman_rank(std::span<const double> x, std::span<const double> y);

}  // namespace dmf
