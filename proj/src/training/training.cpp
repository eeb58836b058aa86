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

#include "dmf/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dmf/error.hpp"
#include "dmf/fusion_decoder.hpp"

namespace dmf {

namespace {

enum Stream : std::uint64_t { kInitStream = 1, kShuffleStream = 2, kTeacherStream = 3 };

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw Error("train config: batch_size must be at least 1");
  if (!(teacher_forcing >= 0 && teacher_forcing <= 1)) throw Error("train config: teacher_forcing must be in [0, 1]");
  if (!(adam.alpha > 0) || !(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1) ||
      !(adam.epsilon > 0)) {
    throw Error("train config: Adam needs alpha > 0, beta1 and beta2 in [0, 1), epsilon > 0");
  }
  if (grad_clip < 0) throw Error("train config: grad_clip must be >= 0");
}

std::string TrainLog::train_csv(bool with_wall_time) const {
  std::ostringstream os;
  os << (with_wall_time ? "step,loss,wall_ms\n" : "step,loss\n");
  for (const Step& s : steps) {
    os << s.step << ',' << format_double(s.loss);
    if (with_wall_time) os << ',' << format_double(s.wall_ms);
    os << '\n';
  }
  return os.str();
}

std::string TrainLog::eval_csv() const {
  std::ostringstream os;
  os << "step,val_ppl\n";
  for (const Eval& e : evals) os << e.step << ',' << format_double(e.val_ppl) << '\n';
  return os.str();
}

void check_clip_tokens(std::span<const Clip> clips, std::size_t vocab_size) {
  auto check = [&](const Comment& c, std::size_t i) {
    for (TokenId t : c.tokens) {
      if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) {
        throw DataError("clip " + std::to_string(i) + " holds token id " + std::to_string(t) +
                        ", outside the vocabulary of size " + std::to_string(vocab_size));
      }
    }
  };
  for (std::size_t i = 0; i < clips.size(); ++i) {
    check(clips[i].target, i);
    for (const Comment& c : clips[i].context) check(c, i);
  }
}

template <typename T>
double evaluate_perplexity(const Model<T>& model, std::span<const Clip> clips, bool per_sentence) {
  if (clips.empty()) throw DataError("evaluate_perplexity: empty split");
  const auto streams = teacher_forced_log_probs(model, clips);
  double total = 0, sentence_sum = 0;
  std::size_t n = 0;
  for (const auto& row : streams) {
    double s = 0;
    for (double lp : row) s += lp / std::log(2.0);
    total += s;
    n += row.size();
    sentence_sum += std::exp2(-s / static_cast<double>(row.size()));
  }
  if (per_sentence) return sentence_sum / static_cast<double>(streams.size());
  return std::exp2(-total / static_cast<double>(n));
}

template <typename T>
TrainResult<T> run_training(std::span<const Clip> train, std::span<const Clip> validation, const ModelConfig& mcfg,
                            const TrainConfig& config, const StepObserver& observer) {
  config.validate();
  if (train.empty()) throw DataError("run_training: no training clips");
  check_clip_tokens(train, mcfg.vocab_size);
  check_clip_tokens(validation, mcfg.vocab_size);

  const Rng root(config.seed);
  Rng init = root.fork(kInitStream), shuffler = root.fork(kShuffleStream), teacher = root.fork(kTeacherStream);
  TrainResult<T> result{Model<T>(mcfg, init), {}, {}};
  Model<T>& model = result.model;
  AdamState<T> adam;
  adam.config = config.adam;

  const auto t0 = std::chrono::steady_clock::now();
  auto evaluate = [&](std::size_t step) {
    if (validation.empty()) return;
    const double ppl = evaluate_perplexity(model, validation, config.per_sentence_ppl);
    result.log.evals.push_back({step, ppl});
    if (ppl < result.best_ppl) {
      result.best_ppl = ppl;
      result.best_step = step;
      result.best = model.to_checkpoint();
    }
  };

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t step = 0;
  bool done = config.max_steps > 0 && step >= config.max_steps;
  for (std::size_t epoch = 0; epoch < config.epochs && !done; ++epoch) {
    shuffler.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size() && !done; start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const ClipBatch batch =
          make_batch(train, std::span<const std::size_t>(order.data() + start, end - start), mcfg.kind);
      const double loss = train_step(model, adam, batch, config.teacher_forcing, teacher, config.grad_clip);
      ++step;
      const double wall = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      result.log.steps.push_back({step, loss, wall});
      if (observer) observer(result.log.steps.back());
      if (config.eval_every > 0 && step % config.eval_every == 0) evaluate(step);
      done = config.max_steps > 0 && step >= config.max_steps;
    }
    if (config.eval_every == 0) evaluate(step);
  }
  if (result.log.evals.empty() || result.log.evals.back().step != step) evaluate(step);
  if (validation.empty()) {
    result.best = model.to_checkpoint();
    result.best_step = step;
  }
  return result;
}

template double evaluate_perplexity(const Model<float>&, std::span<const Clip>, bool);
template double evaluate_perplexity(const Model<double>&, std::span<const Clip>, bool);
template TrainResult<float> run_training(std::span<const Clip>, std::span<const Clip>, const ModelConfig&,
                                         const TrainConfig&, const StepObserver&);
template TrainResult<double> run_training(std::span<const Clip>, std::span<const Clip>, const ModelConfig&,
                                          const TrainConfig&, const StepObserver&);

}  // namespace dmf
