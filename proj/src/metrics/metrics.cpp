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

#include <json.hpp>

#include "dmf/error.hpp"
#include "dmf/metrics.hpp"

namespace dmf {

double perplexity(std::span<const std::vector<double>> log2_probs, bool per_sentence) {
  double total = 0, sentence_sum = 0;
  std::size_t n = 0;
  for (const auto& row : log2_probs) {
    if (row.empty()) throw EvalError("perplexity: a probability stream is empty");
    const double s = std::accumulate(row.begin(), row.end(), 0.0);
    total += s;
    n += row.size();
    sentence_sum += std::exp2(-s / static_cast<double>(row.size()));
  }
  if (n == 0) throw EvalError("perplexity: no scored tokens");
  if (per_sentence) return sentence_sum / static_cast<double>(log2_probs.size());
  return std::exp2(-total / static_cast<double>(n));
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["bleu4"] = bleu4;
  j["perplexity"] = perplexity;
  j["avg_length"] = avg_length;
  j["n"] = n;
  if (!meta.empty()) j["meta"] = meta;
  return j.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvalReport r;
    r.bleu4 = j.at("bleu4").get<double>();
    r.perplexity = j.at("perplexity").get<double>();
    r.avg_length = j.at("avg_length").get<double>();
    r.n = j.at("n").get<std::size_t>();
    if (j.contains("meta")) r.meta = j.at("meta").get<std::map<std::string, std::string>>();
    return r;
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    throw ParseError(std::string("eval report: ") + e.what(),
                     1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n')));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("eval report: ") + e.what());
  }
}

EvalReport corpus_report(std::span<const TokenSeq> candidates, std::span<const std::vector<double>> log2_probs,
                         const ReferenceSet& refs) {
  if (candidates.empty()) throw EvalError("corpus_report: no candidates");
  if (!log2_probs.empty() && log2_probs.size() != candidates.size()) {
    throw EvalError("corpus_report: " + std::to_string(candidates.size()) + " candidates but " +
                    std::to_string(log2_probs.size()) + " probability streams");
  }
  EvalReport r;
  r.n = candidates.size();
  double bleu = 0, length = 0;
  for (const TokenSeq& c : candidates) {
    length += static_cast<double>(c.size());
    if (!c.empty()) bleu += bleu4_max(c, refs);
  }
  r.bleu4 = 100.0 * bleu / static_cast<double>(r.n);
  r.avg_length = length / static_cast<double>(r.n);
  r.perplexity = log2_probs.empty() ? 0.0 : perplexity(log2_probs);
  r.meta = {{"bleu_smoothing", "zero precisions floored at 1e-9"},
            {"bleu_aggregation", "mean of per-candidate max over references"},
            {"perplexity", "2^(-mean log2 p), pooled over tokens including EOS"}};
  return r;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rank(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw EvalError("spearman_rank: lengths differ (" + std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw EvalError("spearman_rank: need at least two points");
  const std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) throw EvalError("spearman_rank: undefined for a constant input");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace dmf
