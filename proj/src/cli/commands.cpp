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
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dmf/binary_io.hpp"
#include "dmf/checkpoint.hpp"
#include "dmf/cli.hpp"
#include "dmf/error.hpp"
#include "dmf/fusion_decoder.hpp"
#include "dmf/generate.hpp"
#include "dmf/metrics.hpp"
#include "dmf/parallel.hpp"
#include "dmf/synthetic.hpp"
#include "dmf/training.hpp"

namespace dmf {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct CliFailure {
  int code;
  std::string message;
};

// Runs f, turning any library error into an exit code.
template <typename F>
auto stage(int code, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const CliFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw CliFailure{code, e.what()};
  }
}

// Keys accepted in config files, shared by all commands so one file can
// drive a whole experiment.
const std::set<std::string> kKnownKeys = {
    "seed",          "videos",         "test_videos",     "ref_videos",   "length",      "channels",
    "height",        "width",          "comment_rate",    "thread_stay",  "noise_prob",  "hue_step",
    "frames_per_clip", "context_comments", "vocab_max",   "out",          "corpus",      "variant",
    "batch_size",    "epochs",         "max_steps",       "lr",           "beta1",       "beta2",
    "epsilon",       "teacher_forcing", "eval_every",     "grad_clip",    "per_sentence_ppl", "dims",
    "embed_dim",     "enc_hidden",     "gate_dim",        "conv_channels", "linear_hidden", "swap_gate",
    "validation",    "checkpoint",     "mode",            "max_len",      "probs",       "candidates",
    "refs",          "max_size",
};

/// Flag > config file > default resolution. Every resolved value is
/// recorded so the run can echo its full configuration.
class Settings {
 public:
  void load_file(const std::string& path) {
    if (path.empty()) return;
    std::string text;
    try {
      text = binary::read_file(path);
    } catch (const std::exception& e) {
      throw CliFailure{kExitConfig, e.what()};
    }
    try {
      file_ = json::parse(text);
    } catch (const json::parse_error& e) {
      const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
      const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
      throw CliFailure{kExitConfig, ParseError(path + ": invalid JSON config: " + e.what(), line).what()};
    }
    if (!file_.is_object()) throw CliFailure{kExitConfig, path + ": config must be a JSON object (line 1)"};
    for (const auto& [key, value] : file_.items()) {
      if (!kKnownKeys.count(key)) throw CliFailure{kExitConfig, path + ": unknown config key \"" + key + "\""};
    }
  }

  template <typename T>
  T get(const std::string& key, const CLI::Option* flag, const T& flag_value, const T& fallback) {
    T v = fallback;
    if (flag && flag->count() > 0) {
      v = flag_value;
    } else if (file_.contains(key)) {
      try {
        v = file_.at(key).get<T>();
      } catch (const json::exception& e) {
        throw CliFailure{kExitConfig, "config key \"" + key + "\": " + e.what()};
      }
    }
    resolved_[key] = v;
    return v;
  }

  void echo(const fs::path& path) const {
    stage(kExitData, [&] {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      binary::write_file(path.string(), resolved_.dump(2) + "\n");
    });
  }

 private:
  json file_ = json::object();
  json resolved_ = json::object();
};

template <typename T>
struct Flag {
  T value{};
  CLI::Option* opt = nullptr;
};

template <typename T>
Flag<T>& add(CLI::App* app, std::map<std::string, std::shared_ptr<void>>& store, const std::string& name,
             const std::string& help) {
  auto flag = std::make_shared<Flag<T>>();
  flag->opt = app->add_option("--" + name, flag->value, help);
  store[name] = flag;
  return *flag;
}

std::string key_of(const std::string& flag) {
  std::string k = flag;
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

// Command-line options of one subcommand, keyed by flag name.
class Options {
 public:
  explicit Options(CLI::App* app) : app_(app) {
    config_ = app_->add_option("--config", config_path_, "JSON config file; flags override its values");
  }

  template <typename T>
  void define(const std::string& name, const std::string& help) {
    add<T>(app_, store_, name, help);
  }
  void define_switch(const std::string& name, const std::string& help) {
    auto flag = std::make_shared<Flag<bool>>();
    flag->opt = app_->add_flag("--" + name, flag->value, help);
    store_[name] = flag;
  }

  template <typename T>
  T get(Settings& s, const std::string& name, const T& fallback) const {
    const auto& f = *std::static_pointer_cast<Flag<T>>(store_.at(name));
    return s.get<T>(key_of(name), f.opt, f.value, fallback);
  }

  const std::string& config_path() const { return config_path_; }

 private:
  CLI::App* app_;
  CLI::Option* config_ = nullptr;
  std::string config_path_;
  std::map<std::string, std::shared_ptr<void>> store_;
};

std::string require_path(const std::string& value, const char* name) {
  if (value.empty()) throw CliFailure{kExitConfig, std::string("missing required setting --") + name};
  return value;
}

// A corpus argument is a manifest or a directory holding `file`.
std::string manifest_in(const std::string& corpus, const char* file) {
  if (fs::is_directory(corpus)) return (fs::path(corpus) / file).string();
  return corpus;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------- dataset-gen

void define_scene(Options& o) {
  o.define<std::uint64_t>("seed", "random seed");
  o.define<std::size_t>("videos", "frame-bearing videos, test split included");
  o.define<std::size_t>("test-videos", "trailing videos used as the test split");
  o.define<std::size_t>("ref-videos", "comment-only videos for the reference pool");
  o.define<std::size_t>("length", "video length in seconds (1 frame per second)");
  o.define<std::size_t>("channels", "frame channels (1 or 3)");
  o.define<std::size_t>("height", "frame height");
  o.define<std::size_t>("width", "frame width");
  o.define<double>("comment-rate", "comments per second");
  o.define<double>("thread-stay", "probability the comment thread keeps its state");
  o.define<double>("noise-prob", "probability of an unconditioned comment");
  o.define<double>("hue-step", "per-second hue drift");
  o.define<std::size_t>("frames-per-clip", "frames per clip (n)");
  o.define<std::size_t>("context-comments", "context comments per clip (m)");
  o.define<std::size_t>("vocab-max", "vocabulary cap, reserved ids included");
  o.define<std::string>("out", "output directory");
}

SceneSpec resolve_scene(const Options& o, Settings& s) {
  SceneSpec d;
  SceneSpec scene;
  scene.seed = o.get<std::uint64_t>(s, "seed", d.seed);
  scene.num_videos = o.get<std::size_t>(s, "videos", d.num_videos);
  scene.test_videos = o.get<std::size_t>(s, "test-videos", d.test_videos);
  scene.ref_videos = o.get<std::size_t>(s, "ref-videos", d.ref_videos);
  scene.video_length_s = o.get<std::size_t>(s, "length", d.video_length_s);
  scene.channels = o.get<std::size_t>(s, "channels", d.channels);
  scene.height = o.get<std::size_t>(s, "height", d.height);
  scene.width = o.get<std::size_t>(s, "width", d.width);
  scene.comment_rate = o.get<double>(s, "comment-rate", d.comment_rate);
  scene.thread_stay = o.get<double>(s, "thread-stay", d.thread_stay);
  scene.noise_prob = o.get<double>(s, "noise-prob", d.noise_prob);
  scene.hue_step = o.get<double>(s, "hue-step", d.hue_step);
  scene.frames_per_clip = o.get<std::size_t>(s, "frames-per-clip", d.frames_per_clip);
  scene.context_comments = o.get<std::size_t>(s, "context-comments", d.context_comments);
  scene.vocab_max = o.get<std::size_t>(s, "vocab-max", d.vocab_max);
  return scene;
}

int cmd_dataset_gen(const Options& o, std::ostream& out) {
  Settings s;
  s.load_file(o.config_path());
  const SceneSpec scene = resolve_scene(o, s);
  const std::string dir = require_path(o.get<std::string>(s, "out", ""), "out");
  const SyntheticCorpus corpus = stage(kExitConfig, [&] { return generate_corpus(scene); });
  stage(kExitData, [&] { write_corpus(corpus, dir); });
  s.echo(fs::path(dir) / "config.resolved.json");
  out << "videos " << scene.num_videos << "  frames " << corpus.frames << "  comments " << corpus.comments
      << "  clips " << corpus.train.size() << " train / " << corpus.test.size() << " test"
      << "  skipped " << corpus.skipped << "  vocab " << corpus.vocab.size() << "  refs " << corpus.references.size()
      << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- build-vocab

int cmd_build_vocab(const Options& o, std::ostream& out) {
  Settings s;
  s.load_file(o.config_path());
  const std::string corpus = require_path(o.get<std::string>(s, "corpus", ""), "corpus");
  const std::string path = require_path(o.get<std::string>(s, "out", ""), "out");
  const std::size_t max_size = o.get<std::size_t>(s, "max-size", Vocabulary::kDefaultMaxSize);
  const Vocabulary vocab = stage(kExitData, [&] {
    const auto stream = manifest_comments(manifest_in(corpus, "train.jsonl"));
    return build_vocab(stream, max_size);
  });
  stage(kExitData, [&] { vocab.save(path); });
  out << "vocabulary of " << vocab.size() << " ids written to " << path << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------- train

void define_model(Options& o) {
  o.define<std::string>("dims", "dimension preset: desk, full or tiny");
  o.define<std::size_t>("embed-dim", "word embedding size");
  o.define<std::size_t>("enc-hidden", "encoder hidden size (decoder uses twice this)");
  o.define<std::size_t>("gate-dim", "gate projection size");
  o.define<std::vector<std::size_t>>("conv-channels", "three conv channel counts");
  o.define<std::vector<std::size_t>>("linear-hidden", "two hidden linear widths");
  o.define_switch("swap-gate", "pair each gate weight with the other branch");
}

ModelConfig resolve_model(const Options& o, Settings& s, VariantKind kind, std::size_t vocab_size,
                          const Shape& frame_shape) {
  const std::string dims = o.get<std::string>(s, "dims", "desk");
  ModelConfig c;
  if (dims == "desk") {
    c = ModelConfig::desk(kind, vocab_size);
  } else if (dims == "full") {
    c = ModelConfig::full(kind, vocab_size);
  } else if (dims == "tiny") {
    c = ModelConfig::tiny(kind, vocab_size);
  } else {
    throw CliFailure{kExitConfig, "unknown dims preset \"" + dims + "\" (expected desk, full or tiny)"};
  }
  c.frame_channels = frame_shape.at(0);
  c.frame_height = frame_shape.at(1);
  c.frame_width = frame_shape.at(2);
  c.embed_dim = o.get<std::size_t>(s, "embed-dim", c.embed_dim);
  c.enc_hidden = o.get<std::size_t>(s, "enc-hidden", c.enc_hidden);
  c.dec_hidden = 2 * c.enc_hidden;
  c.gate_dim = o.get<std::size_t>(s, "gate-dim", c.gate_dim);
  const auto conv = o.get<std::vector<std::size_t>>(s, "conv-channels", {c.conv_channels.begin(), c.conv_channels.end()});
  const auto lin = o.get<std::vector<std::size_t>>(s, "linear-hidden", {c.linear_hidden.begin(), c.linear_hidden.end()});
  if (conv.size() != 3) throw CliFailure{kExitConfig, "conv_channels needs exactly 3 values"};
  if (lin.size() != 2) throw CliFailure{kExitConfig, "linear_hidden needs exactly 2 values"};
  std::copy(conv.begin(), conv.end(), c.conv_channels.begin());
  std::copy(lin.begin(), lin.end(), c.linear_hidden.begin());
  c.swap_gate_pairing = o.get<bool>(s, "swap-gate", false);
  stage(kExitConfig, [&] { c.validate(); });
  return c;
}

VariantKind resolve_variant(const Options& o, Settings& s, const std::string& fallback) {
  const std::string name = o.get<std::string>(s, "variant", fallback);
  return stage(kExitConfig, [&] { return parse_variant(name); });
}

int cmd_train(const Options& o, std::ostream& out) {
  Settings s;
  s.load_file(o.config_path());
  const std::string corpus_path = require_path(o.get<std::string>(s, "corpus", ""), "corpus");
  const std::string dir = require_path(o.get<std::string>(s, "out", ""), "out");
  const VariantKind kind = resolve_variant(o, s, "proposal");

  TrainConfig tc;
  tc.seed = o.get<std::uint64_t>(s, "seed", tc.seed);
  tc.batch_size = o.get<std::size_t>(s, "batch-size", tc.batch_size);
  tc.epochs = o.get<std::size_t>(s, "epochs", tc.epochs);
  tc.max_steps = o.get<std::size_t>(s, "max-steps", tc.max_steps);
  tc.adam.alpha = o.get<double>(s, "lr", tc.adam.alpha);
  tc.adam.beta1 = o.get<double>(s, "beta1", tc.adam.beta1);
  tc.adam.beta2 = o.get<double>(s, "beta2", tc.adam.beta2);
  tc.adam.epsilon = o.get<double>(s, "epsilon", tc.adam.epsilon);
  tc.teacher_forcing = o.get<double>(s, "teacher-forcing", tc.teacher_forcing);
  tc.eval_every = o.get<std::size_t>(s, "eval-every", tc.eval_every);
  tc.grad_clip = o.get<double>(s, "grad-clip", tc.grad_clip);
  tc.per_sentence_ppl = o.get<bool>(s, "per-sentence-ppl", false);
  stage(kExitConfig, [&] { tc.validate(); });

  const std::string train_manifest = manifest_in(corpus_path, "train.jsonl");
  std::string val_manifest = o.get<std::string>(s, "validation", "");
  if (val_manifest.empty() && fs::is_directory(corpus_path) && fs::exists(fs::path(corpus_path) / "test.jsonl")) {
    val_manifest = (fs::path(corpus_path) / "test.jsonl").string();
  }
  if (val_manifest == "none") val_manifest.clear();

  const Corpus train = stage(kExitData, [&] { return load_corpus(train_manifest); });
  if (train.clips.empty()) throw CliFailure{kExitData, train_manifest + ": no clips"};
  const Corpus validation =
      val_manifest.empty() ? Corpus{{}, Vocabulary()} : stage(kExitData, [&] { return load_corpus(val_manifest); });
  if (!val_manifest.empty() && !(validation.vocab == train.vocab)) {
    throw CliFailure{kExitData, "validation vocabulary differs from the training vocabulary"};
  }
  const ModelConfig mc = resolve_model(o, s, kind, train.vocab.size(), train.clips.front().frames.front()->pixels.shape());
  stage(kExitData, [&] {
    check_vocab_coverage(train.clips, train.vocab);
    check_vocab_coverage(validation.clips, train.vocab);
  });

  s.echo(fs::path(dir) / "config.resolved.json");
  const TrainResult<float> result = stage(kExitData, [&] {
    return run_training<float>(train.clips, validation.clips, mc, tc);
  });
  stage(kExitData, [&] {
    save_checkpoint((fs::path(dir) / "final.dmf").string(), result.model.to_checkpoint());
    save_checkpoint((fs::path(dir) / "best.dmf").string(), result.best);
    binary::write_file((fs::path(dir) / "train_log.csv").string(), result.log.train_csv());
    binary::write_file((fs::path(dir) / "eval_log.csv").string(), result.log.eval_csv());
  });
  out << variant_name(kind) << ": " << result.log.steps.size() << " steps, "
      << result.model.params().num_scalars() << " parameters";
  if (!result.log.steps.empty()) {
    out << ", loss " << fmt(result.log.steps.front().loss) << " -> " << fmt(result.log.steps.back().loss);
  }
  if (!result.log.evals.empty()) {
    out << ", best val ppl " << fmt(result.best_ppl) << " at step " << result.best_step;
  }
  out << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- generate

int cmd_generate(const Options& o, std::ostream& out) {
  Settings s;
  s.load_file(o.config_path());
  const std::string ckpt_path = require_path(o.get<std::string>(s, "checkpoint", ""), "checkpoint");
  const std::string corpus_path = require_path(o.get<std::string>(s, "corpus", ""), "corpus");
  const std::string out_path = require_path(o.get<std::string>(s, "out", ""), "out");
  GenerateOptions gen = stage(kExitConfig, [&] { return parse_decode_mode(o.get<std::string>(s, "mode", "greedy")); });
  gen.max_len = o.get<std::size_t>(s, "max-len", gen.max_len);
  if (gen.max_len == 0) throw CliFailure{kExitConfig, "max_len must be at least 1"};
  const std::uint64_t seed = o.get<std::uint64_t>(s, "seed", 1);
  const std::string variant = o.get<std::string>(s, "variant", "");
  const bool swap = o.get<bool>(s, "swap-gate", false);
  fs::path probs_path = o.get<std::string>(s, "probs", "");
  if (probs_path.empty()) probs_path = fs::path(out_path).replace_extension(".probs.jsonl");

  const Checkpoint ckpt = stage(kExitCheckpoint, [&] { return load_checkpoint(ckpt_path); });
  const Corpus corpus = stage(kExitData, [&] { return load_corpus(manifest_in(corpus_path, "test.jsonl")); });
  if (corpus.clips.empty()) throw CliFailure{kExitData, "generation corpus has no clips"};
  const Shape& fs_shape = corpus.clips.front().frames.front()->pixels.shape();
  ModelConfig mc = stage(kExitCheckpoint, [&] { return infer_config(ckpt, fs_shape[0], fs_shape[1], fs_shape[2]); });
  if (!variant.empty()) {
    const VariantKind want = stage(kExitConfig, [&] { return parse_variant(variant); });
    if (want != mc.kind) {
      throw CliFailure{kExitCheckpoint, "checkpoint holds a " + std::string(variant_name(mc.kind)) +
                                            " model but --variant asks for " + variant};
    }
  }
  if (mc.vocab_size != corpus.vocab.size()) {
    throw CliFailure{kExitCheckpoint, "checkpoint vocabulary has " + std::to_string(mc.vocab_size) +
                                          " ids but the corpus vocabulary has " + std::to_string(corpus.vocab.size())};
  }
  mc.swap_gate_pairing = swap;
  Rng init(0);
  Model<float> model(mc, init);
  stage(kExitCheckpoint, [&] { model.load(ckpt); });

  const std::vector<Clip>& clips = corpus.clips;
  std::vector<Generation> outputs(clips.size());
  const Rng root(seed);
  stage(kExitData, [&] {
    parallel_for(clips.size(), [&](std::size_t i) {
      Rng rng = root.fork(i);
      outputs[i] = generate(model, clips[i], gen, rng);
    });
  });
  const auto log_probs = stage(kExitData, [&] { return teacher_forced_log_probs(model, clips); });

  std::ostringstream lines, probs;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    lines << json{{"clip", i}, {"tokens", corpus.vocab.decode(outputs[i].tokens)}, {"logprob", outputs[i].log_prob}}
                 .dump()
          << '\n';
    std::vector<double> log2p;
    for (double lp : log_probs[i]) log2p.push_back(lp / std::log(2.0));
    probs << json{{"clip", i}, {"log2p", log2p}}.dump() << '\n';
  }
  stage(kExitData, [&] {
    if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
    binary::write_file(out_path, lines.str());
    binary::write_file(probs_path.string(), probs.str());
  });
  s.echo(fs::path(out_path).replace_extension(".config.json"));
  out << "generated " << clips.size() << " comments with " << variant_name(mc.kind) << " to " << out_path << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- evaluate

template <typename F>
void read_jsonl(const std::string& path, F&& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": " + e.what(), line_no);
    }
  }
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  Settings s;
  s.load_file(o.config_path());
  const std::string cand_path = require_path(o.get<std::string>(s, "candidates", ""), "candidates");
  const std::string refs_path = require_path(o.get<std::string>(s, "refs", ""), "refs");
  const std::string probs_path = o.get<std::string>(s, "probs", "");
  const std::string out_path = require_path(o.get<std::string>(s, "out", ""), "out");

  // Token strings are interned locally: references first, then candidates.
  std::map<std::string, TokenId> ids;
  auto intern = [&](const std::string& tok) {
    return ids.emplace(tok, static_cast<TokenId>(ids.size())).first->second;
  };
  std::vector<TokenSeq> refs;
  stage(kExitData, [&] {
    std::istringstream text(binary::read_file(refs_path));
    std::string line;
    while (std::getline(text, line)) {
      const TokenList toks = split_tokens(line);
      if (toks.empty()) continue;
      TokenSeq seq;
      for (const auto& t : toks) seq.push_back(intern(t));
      refs.push_back(std::move(seq));
    }
  });
  if (refs.empty()) throw CliFailure{kExitEval, refs_path + ": reference set is empty"};

  std::vector<TokenSeq> cands;
  std::vector<std::size_t> cand_clips;
  stage(kExitData, [&] {
    read_jsonl(cand_path, [&](const nlohmann::json& j) {
      TokenSeq seq;
      for (const auto& t : j.at("tokens").get<TokenList>()) seq.push_back(intern(t));
      cands.push_back(std::move(seq));
      cand_clips.push_back(j.at("clip").get<std::size_t>());
    });
  });
  std::vector<std::vector<double>> streams;
  if (!probs_path.empty()) {
    std::vector<std::size_t> prob_clips;
    stage(kExitData, [&] {
      read_jsonl(probs_path, [&](const nlohmann::json& j) {
        streams.push_back(j.at("log2p").get<std::vector<double>>());
        prob_clips.push_back(j.at("clip").get<std::size_t>());
      });
    });
    if (prob_clips != cand_clips) {
      throw CliFailure{kExitEval, "probability file " + probs_path + " does not line up with the candidates (" +
                                      std::to_string(streams.size()) + " vs " + std::to_string(cands.size()) +
                                      " clips)"};
    }
  }
  const ReferenceSet pool = stage(kExitEval, [&] { return ReferenceSet(std::move(refs)); });
  const EvalReport report = stage(kExitEval, [&] { return corpus_report(cands, streams, pool); });
  stage(kExitData, [&] {
    if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
    binary::write_file(out_path, report.to_json());
  });
  s.echo(fs::path(out_path).replace_extension(".config.json"));
  out << "| " << std::left << std::setw(12) << "Candidates" << "| " << std::setw(8) << "BLEU-4"
      << "| " << std::setw(11) << "Perplexity" << "| Avg length |\n";
  out << "| " << std::setw(12) << report.n << "| " << std::setw(8) << fmt(report.bleu4, 2) << "| " << std::setw(11)
      << (streams.empty() ? std::string("-") : fmt(report.perplexity, 2)) << "| " << std::setw(11)
      << fmt(report.avg_length, 2) << "|\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Desk-scale multimodal live-comment generation", "dmf"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("dataset-gen", "generate the synthetic multimodal corpus");
  Options gen_opts(gen);
  define_scene(gen_opts);

  auto* vocab = app.add_subcommand("build-vocab", "build a vocabulary from a corpus manifest");
  Options vocab_opts(vocab);
  vocab_opts.define<std::string>("corpus", "manifest or corpus directory");
  vocab_opts.define<std::string>("out", "vocabulary file to write");
  vocab_opts.define<std::size_t>("max-size", "vocabulary cap, reserved ids included");

  auto* train = app.add_subcommand("train", "train one model variant");
  Options train_opts(train);
  train_opts.define<std::string>("corpus", "corpus directory (train.jsonl, test.jsonl) or training manifest");
  train_opts.define<std::string>("validation", "validation manifest (default: test.jsonl beside train; none: off)");
  train_opts.define<std::string>("variant", "proposal, f2c, m2c or c2c");
  train_opts.define<std::string>("out", "run directory");
  train_opts.define<std::uint64_t>("seed", "training seed");
  train_opts.define<std::size_t>("batch-size", "clips per step");
  train_opts.define<std::size_t>("epochs", "passes over the training clips");
  train_opts.define<std::size_t>("max-steps", "stop after this many steps (0: no cap)");
  train_opts.define<double>("lr", "Adam learning rate");
  train_opts.define<double>("beta1", "Adam beta1");
  train_opts.define<double>("beta2", "Adam beta2");
  train_opts.define<double>("epsilon", "Adam epsilon");
  train_opts.define<double>("teacher-forcing", "teacher forcing ratio");
  train_opts.define<std::size_t>("eval-every", "steps between validations (0: every epoch)");
  train_opts.define<double>("grad-clip", "max global gradient norm (0: off)");
  train_opts.define_switch("per-sentence-ppl", "average per-clip perplexities");
  define_model(train_opts);

  auto* generate_cmd = app.add_subcommand("generate", "generate comments for every clip of a split");
  Options generate_opts(generate_cmd);
  generate_opts.define<std::string>("checkpoint", "checkpoint file");
  generate_opts.define<std::string>("corpus", "corpus directory (uses test.jsonl) or manifest");
  generate_opts.define<std::string>("mode", "greedy, beam:K or sample:TEMP");
  generate_opts.define<std::size_t>("max-len", "maximum tokens before EOS");
  generate_opts.define<std::uint64_t>("seed", "sampling seed");
  generate_opts.define<std::string>("variant", "expected model variant");
  generate_opts.define<std::string>("out", "JSONL output");
  generate_opts.define<std::string>("probs", "teacher-forced log2 probabilities (default: <out>.probs.jsonl)");
  generate_opts.define_switch("swap-gate", "model was trained with --swap-gate");

  auto* eval = app.add_subcommand("evaluate", "score generated comments");
  Options eval_opts(eval);
  eval_opts.define<std::string>("candidates", "JSONL from generate");
  eval_opts.define<std::string>("refs", "reference comments, one per line");
  eval_opts.define<std::string>("probs", "log2 probability JSONL from generate");
  eval_opts.define<std::string>("out", "report JSON");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "dmf: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    if (gen->parsed()) return cmd_dataset_gen(gen_opts, out);
    if (vocab->parsed()) return cmd_build_vocab(vocab_opts, out);
    if (train->parsed()) return cmd_train(train_opts, out);
    if (generate_cmd->parsed()) return cmd_generate(generate_opts, out);
    if (eval->parsed()) return cmd_evaluate(eval_opts, out);
  } catch (const CliFailure& f) {
    err << "dmf: " << f.message << "\n";
    return f.code;
  }
  err << "dmf: no command\n";
  return kExitConfig;
}

}  // namespace dmf
