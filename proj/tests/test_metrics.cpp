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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "dmf/error.hpp"
#include "dmf/metrics.hpp"
#include "dmf/rng.hpp"

namespace dmf {
namespace {

// Direct n-gram counting, one map per order.
double bleu_ref(const TokenSeq& cand, const TokenSeq& ref) {
  double log_sum = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::map<TokenSeq, int> cc, rc;
    for (std::size_t i = 0; i + n <= cand.size(); ++i) ++cc[TokenSeq(cand.begin() + i, cand.begin() + i + n)];
    for (std::size_t i = 0; i + n <= ref.size(); ++i) ++rc[TokenSeq(ref.begin() + i, ref.begin() + i + n)];
    int clipped = 0, total = 0;
    for (const auto& [g, k] : cc) {
      total += k;
      const auto it = rc.find(g);
      clipped += std::min(k, it == rc.end() ? 0 : it->second);
    }
    const double p = clipped == 0 ? 1e-9 : static_cast<double>(clipped) / total;
    log_sum += std::log(p) / 4;
  }
  const double c = static_cast<double>(cand.size()), r = static_cast<double>(ref.size());
  const double bp = c < r ? std::exp(1 - r / c) : 1.0;
  return bp * std::exp(log_sum);
}

TokenSeq random_seq(Rng& rng, std::size_t vocab, std::size_t max_len) {
  TokenSeq s(1 + rng.below(max_len));
  for (auto& t : s) t = static_cast<TokenId>(4 + rng.below(vocab));
  return s;
}

TEST(Bleu, HandCountedExample) {
  const TokenSeq cand{4, 5, 6, 7, 8}, ref{4, 5, 6, 7, 9};
  EXPECT_NEAR(bleu4_sentence(cand, ref), std::pow(0.2, 0.25), 1e-9);
  EXPECT_NEAR(std::pow(0.2, 0.25), 0.6687, 1e-4);
}

TEST(Bleu, IdentityDisjointAndBrevity) {
  const TokenSeq a{4, 5, 6, 7, 8, 9};
  EXPECT_DOUBLE_EQ(bleu4_sentence(a, a), 1.0);
  EXPECT_LT(bleu4_sentence(TokenSeq{10, 11, 12, 13}, a), 1e-8);
  // Half-length exact prefix: all precisions 1, penalty exp(1 - 2).
  EXPECT_NEAR(bleu4_sentence(TokenSeq{4, 5, 6, 7}, TokenSeq{4, 5, 6, 7, 8, 9, 10, 11}), std::exp(-1.0), 1e-12);
  EXPECT_THROW(bleu4_sentence(TokenSeq{}, a), EvalError);
}

TEST(Bleu, MatchesDirectCounting) {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const auto c = random_seq(rng, 6, 8), r = random_seq(rng, 6, 8);
    EXPECT_NEAR(bleu4_sentence(c, r), bleu_ref(c, r), 1e-12 * std::max(1.0, bleu_ref(c, r)));
  }
}

TEST(Bleu, InvariantUnderTokenRelabeling) {
  Rng rng(2);
  std::vector<TokenId> perm(10);
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<TokenId>(4 + i);
  for (int i = 0; i < 500; ++i) {
    auto c = random_seq(rng, 10, 7), r = random_seq(rng, 10, 7);
    rng.shuffle(std::span<TokenId>(perm));
    auto rename = [&](TokenSeq s) {
      for (auto& t : s) t = perm[t - 4];
      return s;
    };
    EXPECT_EQ(bleu4_sentence(c, r), bleu4_sentence(rename(c), rename(r)));
  }
}

TEST(BleuMax, DegenerateAndVerbatimCases) {
  const TokenSeq c{4, 5, 6, 7}, r{4, 5, 9, 7, 6};
  EXPECT_EQ(bleu4_max(c, ReferenceSet({r})), bleu4_sentence(c, r));
  EXPECT_DOUBLE_EQ(bleu4_max(c, ReferenceSet({r, c, r})), 1.0);
  EXPECT_THROW(ReferenceSet(std::vector<TokenSeq>{}), EvalError);
  EXPECT_THROW(bleu4_max(TokenSeq{}, ReferenceSet({r})), EvalError);
}

TEST(BleuMax, PrunedSearchEqualsExhaustiveScan) {
  Rng rng(3);
  // Two vocabulary sizes: a small one where most references share 4-grams,
  // a large one where the fallback tiers are exercised.
  for (std::size_t vocab : {5u, 60u}) {
    std::vector<TokenSeq> refs;
    for (int i = 0; i < 1000; ++i) refs.push_back(random_seq(rng, vocab, 9));
    const ReferenceSet set(refs);
    for (int i = 0; i < 100; ++i) {
      const auto c = random_seq(rng, vocab, 8);
      const auto fast = set.best(c), slow = set.best_exhaustive(c);
      EXPECT_EQ(fast.score, slow.score);
      EXPECT_EQ(fast.index, slow.index);
      double want = 0;
      std::size_t at = 0;
      for (std::size_t k = 0; k < refs.size(); ++k) {
        const double s = bleu4_sentence(c, refs[k]);
        if (s > want) want = s, at = k;
      }
      EXPECT_EQ(slow.score, want);
      EXPECT_EQ(slow.index, at);
    }
  }
}

TEST(BleuMax, AddingReferencesNeverLowersTheScore) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_seq(rng, 8, 6);
    std::vector<TokenSeq> refs;
    double prev = 0;
    for (int k = 0; k < 20; ++k) {
      refs.push_back(random_seq(rng, 8, 6));
      const double s = bleu4_max(c, ReferenceSet(refs));
      EXPECT_GE(s, prev);
      prev = s;
    }
  }
}

TEST(Perplexity, PooledAndPerSentence) {
  const std::vector<std::vector<double>> streams{{-1, -1}, {-3}};
  EXPECT_NEAR(perplexity(streams), std::pow(2.0, 5.0 / 3), 1e-12);
  EXPECT_NEAR(perplexity(streams, true), (2.0 + 8.0) / 2, 1e-12);
  EXPECT_DOUBLE_EQ(perplexity(std::vector<std::vector<double>>{{0, 0, 0}}), 1.0);
  EXPECT_THROW(perplexity(std::vector<std::vector<double>>{}), EvalError);
  EXPECT_THROW(perplexity(std::vector<std::vector<double>>{{-1}, {}}), EvalError);
}

TEST(CorpusReport, VerbatimCandidateScoresOneHundred) {
  const TokenSeq c{4, 5, 6, 7, 8};
  const ReferenceSet refs({TokenSeq{9, 10}, c});
  const std::vector<TokenSeq> cands{c};
  const auto r = corpus_report(cands, std::vector<std::vector<double>>{{-1, -1}}, refs);
  EXPECT_DOUBLE_EQ(r.bleu4, 100.0);
  EXPECT_DOUBLE_EQ(r.avg_length, 5.0);
  EXPECT_DOUBLE_EQ(r.perplexity, 2.0);
  EXPECT_EQ(r.n, 1u);
}

TEST(CorpusReport, EmptyCandidateAndMisalignment) {
  const ReferenceSet refs({TokenSeq{4, 5, 6, 7}});
  const std::vector<TokenSeq> cands{TokenSeq{4, 5, 6, 7}, TokenSeq{}};
  const auto r = corpus_report(cands, {}, refs);
  EXPECT_DOUBLE_EQ(r.bleu4, 50.0);
  EXPECT_DOUBLE_EQ(r.avg_length, 2.0);
  EXPECT_EQ(r.perplexity, 0.0);
  EXPECT_THROW(corpus_report(cands, std::vector<std::vector<double>>{{-1}}, refs), EvalError);
  EXPECT_THROW(corpus_report(std::vector<TokenSeq>{}, {}, refs), EvalError);
}

TEST(EvalReport, JsonRoundTrip) {
  EvalReport r;
  r.bleu4 = 12.345678901234567;
  r.perplexity = 3.0000000000000004;
  r.avg_length = 5.5;
  r.n = 200;
  r.meta["smoothing"] = "epsilon";
  const std::string text = r.to_json();
  const EvalReport back = EvalReport::from_json(text);
  EXPECT_EQ(back.bleu4, r.bleu4);
  EXPECT_EQ(back.perplexity, r.perplexity);
  EXPECT_EQ(back.avg_length, r.avg_length);
  EXPECT_EQ(back.n, r.n);
  EXPECT_EQ(back.meta, r.meta);
  EXPECT_EQ(back.to_json(), text);
  EXPECT_NE(text.find("\"bleu4\""), std::string::npos);
  EXPECT_THROW(EvalReport::from_json("{\"bleu4\": 1"), Error);
}

TEST(Spearman, Examples) {
  const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4}, rev{4, 3, 2, 1};
  EXPECT_NEAR(spearman_rank(x, x), 1.0, 1e-12);
  EXPECT_NEAR(spearman_rank(x, rev), -1.0, 1e-12);
  EXPECT_NEAR(spearman_rank(x, y), 0.8, 1e-12);
  // Ties take average ranks: (1, 2.5, 2.5, 4) against (1, 2, 3, 4).
  EXPECT_NEAR(spearman_rank(std::vector<double>{1, 2, 2, 3}, x), 4.5 / std::sqrt(4.5 * 5.0), 1e-12);
  EXPECT_THROW(spearman_rank(x, std::vector<double>{1, 2}), EvalError);
  EXPECT_THROW(spearman_rank(std::vector<double>{1}, std::vector<double>{1}), EvalError);
  EXPECT_THROW(spearman_rank(x, std::vector<double>{2, 2, 2, 2}), EvalError);
}

}  // namespace
}  // namespace dmf
