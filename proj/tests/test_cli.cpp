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

#include <filesystem>
#include <sstream>

#include "dmf/binary_io.hpp"
#include "dmf/checkpoint.hpp"
#include "dmf/cli.hpp"
#include "dmf/metrics.hpp"
#include "dmf/model.hpp"
#include "test_util.hpp"

namespace dmf {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string str(const fs::path& p) { return p.string(); }

// A three-video corpus with a small reference pool.
fs::path make_corpus(const std::string& name, const std::string& seed = "1") {
  const auto dir = testing::scratch_dir(name);
  const CliRun r = cli({"dataset-gen", "--out", str(dir), "--seed", seed, "--videos", "3", "--test-videos", "1",
                     "--ref-videos", "1", "--length", "24"});
  EXPECT_EQ(r.code, 0) << r.err;
  return dir;
}

const fs::path& shared_corpus() {
  static const fs::path dir = make_corpus("cli_corpus");
  return dir;
}

CliRun train(const fs::path& out, std::vector<std::string> extra = {}) {
  std::vector<std::string> args{"train", "--corpus", str(shared_corpus()), "--out", str(out), "--dims", "tiny",
                                "--epochs", "1", "--batch-size", "8"};
  args.insert(args.end(), extra.begin(), extra.end());
  return cli(args);
}

const fs::path& trained_proposal() {
  static const fs::path dir = [] {
    const auto d = testing::scratch_dir("cli_train_proposal");
    const CliRun r = train(d);
    EXPECT_EQ(r.code, 0) << r.err;
    return d;
  }();
  return dir;
}

CliRun generate(const fs::path& out, std::vector<std::string> extra = {}) {
  std::vector<std::string> args{"generate", "--checkpoint", str(trained_proposal() / "final.dmf"), "--corpus",
                                str(shared_corpus()), "--out", str(out)};
  args.insert(args.end(), extra.begin(), extra.end());
  return cli(args);
}

TEST(CliDatasetGen, WritesLoadableCorpusAndSummary) {
  const auto dir = shared_corpus();
  EXPECT_TRUE(fs::exists(dir / "train.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "test.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "refs.txt"));
  EXPECT_TRUE(fs::exists(dir / "config.resolved.json"));
  const CliRun r = cli({"dataset-gen", "--out", str(testing::scratch_dir("cli_summary")), "--videos", "2",
                     "--test-videos", "1", "--ref-videos", "0", "--length", "12"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("frames 24"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("vocab"), std::string::npos);
}

TEST(CliDatasetGen, SameSeedSameBytes) {
  const auto a = make_corpus("cli_same_a"), b = make_corpus("cli_same_b");
  for (const char* f : {"train.jsonl", "test.jsonl", "refs.txt", "vocab.txt"}) {
    EXPECT_EQ(binary::read_file(str(a / f)), binary::read_file(str(b / f))) << f;
  }
  const auto c = make_corpus("cli_same_c", "2");
  EXPECT_NE(binary::read_file(str(a / "train.jsonl")), binary::read_file(str(c / "train.jsonl")));
}

TEST(CliConfig, BadJsonIsExitTwoWithLine) {
  const auto dir = testing::scratch_dir("cli_badjson");
  binary::write_file(str(dir / "c.json"), "{\n  \"seed\": 3,\n  \"videos\" 2\n}\n");
  const CliRun r = cli({"dataset-gen", "--config", str(dir / "c.json"), "--out", str(dir / "out")});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST(CliConfig, UnknownKeysFlagsAndCommandsAreExitTwo) {
  const auto dir = testing::scratch_dir("cli_badkey");
  binary::write_file(str(dir / "c.json"), "{\"sede\": 3}");
  EXPECT_EQ(cli({"dataset-gen", "--config", str(dir / "c.json"), "--out", str(dir / "o")}).code, kExitConfig);
  EXPECT_EQ(cli({"dataset-gen", "--bogus", "1"}).code, kExitConfig);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitConfig);
  EXPECT_EQ(cli({}).code, kExitConfig);
  EXPECT_EQ(cli({"dataset-gen"}).code, kExitConfig);  // --out missing
  EXPECT_EQ(cli({"train", "--corpus", str(shared_corpus()), "--out", str(dir / "t"), "--variant", "x2c"}).code,
            kExitConfig);
}

TEST(CliConfig, FlagBeatsFileBeatsDefault) {
  const auto dir = testing::scratch_dir("cli_precedence");
  binary::write_file(str(dir / "c.json"), "{\"videos\": 2, \"test_videos\": 1, \"ref_videos\": 0, \"length\": 30}");
  const CliRun r = cli({"dataset-gen", "--config", str(dir / "c.json"), "--out", str(dir / "o"), "--length", "12"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("frames 24"), std::string::npos) << r.out;
  const std::string echoed = binary::read_file(str(dir / "o" / "config.resolved.json"));
  EXPECT_NE(echoed.find("12"), std::string::npos);
}

TEST(CliTrain, WritesCheckpointsAndLogs) {
  const auto dir = trained_proposal();
  for (const char* f : {"final.dmf", "best.dmf", "train_log.csv", "eval_log.csv", "config.resolved.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_NO_THROW(load_checkpoint(str(dir / "final.dmf")));
}

TEST(CliTrain, F2cAndZeroEpochs) {
  const auto f2c = testing::scratch_dir("cli_train_f2c");
  const CliRun r = train(f2c, {"--variant", "f2c"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("f2c"), std::string::npos);

  const auto zero = testing::scratch_dir("cli_train_zero");
  ASSERT_EQ(cli({"train", "--corpus", str(shared_corpus()), "--out", str(zero), "--dims", "tiny", "--epochs", "0",
                 "--seed", "9"})
                .code,
            0);
  const Checkpoint ckpt = load_checkpoint(str(zero / "final.dmf"));
  const ModelConfig mc = infer_config(ckpt, 3, 18, 32);
  Rng init = Rng(9).fork(1);
  EXPECT_EQ(ckpt, Model<float>(mc, init).to_checkpoint());
}

TEST(CliTrain, MissingOrMismatchedCorpusIsExitThree) {
  const auto dir = testing::scratch_dir("cli_train_bad");
  EXPECT_EQ(cli({"train", "--corpus", str(dir / "nowhere"), "--out", str(dir / "o")}).code, kExitData);
  // A capped vocabulary cannot equal the shared corpus vocabulary.
  const auto other = testing::scratch_dir("cli_other_vocab");
  ASSERT_EQ(cli({"dataset-gen", "--out", str(other), "--videos", "2", "--test-videos", "1", "--ref-videos", "0",
                 "--length", "24", "--vocab-max", "12"})
                .code,
            0);
  const CliRun r = train(dir / "o2", {"--validation", str(other / "test.jsonl")});
  EXPECT_EQ(r.code, kExitData) << r.err;
}

TEST(CliGenerate, GreedyIsDeterministicAndEqualsBeamOne) {
  const auto dir = testing::scratch_dir("cli_gen");
  ASSERT_EQ(generate(dir / "a.jsonl").code, 0);
  ASSERT_EQ(generate(dir / "b.jsonl").code, 0);
  ASSERT_EQ(generate(dir / "beam.jsonl", {"--mode", "beam:1"}).code, 0);
  const std::string a = binary::read_file(str(dir / "a.jsonl"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, binary::read_file(str(dir / "b.jsonl")));
  EXPECT_EQ(a, binary::read_file(str(dir / "beam.jsonl")));
  EXPECT_EQ(binary::read_file(str(dir / "a.probs.jsonl")), binary::read_file(str(dir / "b.probs.jsonl")));
  EXPECT_NE(a.find("\"tokens\""), std::string::npos);
  EXPECT_EQ(generate(dir / "c.jsonl", {"--mode", "nucleus"}).code, kExitConfig);
}

TEST(CliGenerate, CheckpointProblemsAreExitFour) {
  const auto dir = testing::scratch_dir("cli_gen_bad");
  EXPECT_EQ(generate(dir / "a.jsonl", {"--variant", "c2c"}).code, kExitCheckpoint);
  std::string bytes = binary::read_file(str(trained_proposal() / "final.dmf"));
  bytes[0] ^= 0x5a;
  binary::write_file(str(dir / "bad.dmf"), bytes);
  const CliRun r = cli({"generate", "--checkpoint", str(dir / "bad.dmf"), "--corpus", str(shared_corpus()), "--out",
                     str(dir / "b.jsonl")});
  EXPECT_EQ(r.code, kExitCheckpoint);
  EXPECT_EQ(cli({"generate", "--checkpoint", str(dir / "none.dmf"), "--corpus", str(shared_corpus()), "--out",
                 str(dir / "c.jsonl")})
                .code,
            kExitCheckpoint);
}

TEST(CliEvaluate, CandidatesEqualToReferencesScoreOneHundred) {
  const auto dir = testing::scratch_dir("cli_eval");
  binary::write_file(str(dir / "refs.txt"), "wow so very red\nwhat is this thing now\n");
  binary::write_file(str(dir / "c.jsonl"),
                     "{\"clip\": 0, \"tokens\": [\"wow\", \"so\", \"very\", \"red\"]}\n"
                     "{\"clip\": 1, \"tokens\": [\"what\", \"is\", \"this\", \"thing\", \"now\"]}\n");
  binary::write_file(str(dir / "p.jsonl"), "{\"clip\": 0, \"log2p\": [-1, -1]}\n{\"clip\": 1, \"log2p\": [-1]}\n");
  const CliRun r = cli({"evaluate", "--candidates", str(dir / "c.jsonl"), "--refs", str(dir / "refs.txt"), "--probs",
                     str(dir / "p.jsonl"), "--out", str(dir / "report.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const EvalReport rep = EvalReport::from_json(binary::read_file(str(dir / "report.json")));
  EXPECT_DOUBLE_EQ(rep.bleu4, 100.0);
  EXPECT_DOUBLE_EQ(rep.avg_length, 4.5);
  EXPECT_DOUBLE_EQ(rep.perplexity, 2.0);
  EXPECT_EQ(rep.n, 2u);
  EXPECT_NE(r.out.find("BLEU-4"), std::string::npos);
}

TEST(CliEvaluate, EmptyReferencesAndMisalignmentAreExitFive) {
  const auto dir = testing::scratch_dir("cli_eval_bad");
  binary::write_file(str(dir / "empty.txt"), "\n");
  binary::write_file(str(dir / "refs.txt"), "a b\n");
  binary::write_file(str(dir / "c.jsonl"), "{\"clip\": 0, \"tokens\": [\"a\"]}\n");
  binary::write_file(str(dir / "p.jsonl"), "{\"clip\": 3, \"log2p\": [-1]}\n");
  EXPECT_EQ(cli({"evaluate", "--candidates", str(dir / "c.jsonl"), "--refs", str(dir / "empty.txt"), "--out",
                 str(dir / "r.json")})
                .code,
            kExitEval);
  EXPECT_EQ(cli({"evaluate", "--candidates", str(dir / "c.jsonl"), "--refs", str(dir / "refs.txt"), "--probs",
                 str(dir / "p.jsonl"), "--out", str(dir / "r.json")})
                .code,
            kExitEval);
  binary::write_file(str(dir / "broken.jsonl"), "{\"clip\": 0, \"tokens\": [\"a\"]}\n{oops\n");
  const CliRun r = cli({"evaluate", "--candidates", str(dir / "broken.jsonl"), "--refs", str(dir / "refs.txt"), "--out",
                     str(dir / "r.json")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST(CliEvaluate, EndToEndReportMatchesLibrary) {
  const auto dir = testing::scratch_dir("cli_eval_e2e");
  ASSERT_EQ(generate(dir / "g.jsonl").code, 0);
  const CliRun r = cli({"evaluate", "--candidates", str(dir / "g.jsonl"), "--refs", str(shared_corpus() / "refs.txt"),
                     "--probs", str(dir / "g.probs.jsonl"), "--out", str(dir / "report.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const EvalReport rep = EvalReport::from_json(binary::read_file(str(dir / "report.json")));
  EXPECT_GE(rep.perplexity, 1.0);
  EXPECT_GE(rep.bleu4, 0.0);
  EXPECT_LE(rep.bleu4, 100.0);
}

}  // namespace
}  // namespace dmf
