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
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dmf/adam.hpp"
#include "dmf/checkpoint.hpp"
#include "dmf/corpus.hpp"
#include "dmf/model.hpp"

namespace dmf {

struct TrainConfig {
  std::size_t batch_size = 32;   // 512 at full scale
  std::size_t epochs = 30;
  std::size_t max_steps = 0;     // 0: no cap
  AdamConfig adam;
  double teacher_forcing = 0.5;
  std::uint64_t seed = 1;
  std::size_t eval_every = 0;    // 0: evaluate after every epoch
  double grad_clip = 0;          // 0: off
  bool per_sentence_ppl = false;

  void validate() const;
};

struct TrainLog {
  struct Step {
    std::size_t step;
    double loss;
    double wall_ms;
  };
  struct Eval {
    std::size_t step;
    double val_ppl;
  };
  std::vector<Step> steps;
  std::vector<Eval> evals;

  // "step,loss,wall_ms" (or "step,loss" without wall times).
  std::string train_csv(bool with_wall_time = true) const;
  // "step,val_ppl"
  std::string eval_csv() const;
};

template <typename T>
struct TrainResult {
  Model<T> model;
  TrainLog log;
  Checkpoint best;  // lowest validation perplexity; the final model without validation
  double best_ppl = std::numeric_limits<double>::infinity();
  std::size_t best_step = 0;
};

using StepObserver = std::function<void(const TrainLog::Step&)>;

/// Trains a fresh model. Clips are reshuffled every epoch by a seeded Rng
/// and cut into batches in that order (the last one may be short). The
/// model initialization, the shuffles and the teacher-forcing coins use
/// independent streams forked from the seed, so a run is a pure function
/// of (clips, configs).
template <typename T>
TrainResult<T> run_training(std::span<const Clip> train, std::span<const Clip> validation, const ModelConfig& model,
                            const TrainConfig& config, const StepObserver& observer = {});

// 2^(-mean log2 p) over every scored token of the split, EOS included.
// per_sentence averages each clip's own perplexity instead.
template <typename T>
double evaluate_perplexity(const Model<T>& model, std::span<const Clip> clips, bool per_sentence = false);

// Throws DataError if a token id does not fit the model's vocabulary.
void check_clip_tokens(std::span<const Clip> clips, std::size_t vocab_size);

}  // namespace dmf
