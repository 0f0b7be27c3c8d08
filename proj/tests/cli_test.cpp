// Copyright 2026 The Narrapol Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "narrapol/config.hpp"
#include "narrapol/corpus.hpp"

namespace fs = std::filesystem;

namespace narrapol {
namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("narrapol_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string("\"") + NARRAPOL_CLI + "\" " + args + " -q > \"" + (dir_ / "stdout").string() +
                            "\" 2> \"" + (dir_ / "stderr").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& content) const { std::ofstream(dir_ / name) << content; }

  std::string synth() const {
    const std::string params = std::string(NARRAPOL_SOURCE_DIR) + "/data/synth_params.json";
    EXPECT_EQ(run("synth --params " + params + " --out " + path("syn")), 0);
    return path("syn/synthetic.jsonl");
  }

  fs::path dir_;
};

TEST_F(Cli, UsageErrorsAreConfigErrors) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("analyze"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("--version"), 0);
}

TEST_F(Cli, BadConfigExitsTwo) {
  write("bad.json", R"({"resampling": {"n_replicates": -1}})");
  const std::string corpus = synth();
  EXPECT_EQ(run("analyze --config " + path("bad.json") + " --in " + corpus + " --out " + path("a")), 2);
  write("unknown.json", R"({"colour": "blue"})");
  EXPECT_EQ(run("analyze --config " + path("unknown.json") + " --in " + corpus + " --out " + path("a")), 2);
}

TEST_F(Cli, UnannotatedCorpusExitsFour) {
  Corpus corpus = {make_document("a", DocumentKind::Comment, "v", "israeli-leaning", "some words here"),
                   make_document("b", DocumentKind::Comment, "v", "palestinian-leaning", "other words here")};
  write_corpus(corpus, dir_ / "raw.jsonl");
  EXPECT_EQ(run("analyze --in " + path("raw.jsonl") + " --out " + path("a")), 4);
  write("broken.jsonl", "{\"id\": 3}\n");
  EXPECT_EQ(run("analyze --in " + path("broken.jsonl") + " --out " + path("a")), 4);
}

TEST_F(Cli, FlagsOverrideConfig) {
  const std::string corpus = synth();
  write("cfg.json", R"({"resampling": {"n_replicates": 50, "seed": 1}, "analysis": {"divergence_mode": "reduced"}})");
  ASSERT_EQ(run("analyze --config " + path("cfg.json") + " --in " + corpus + " --seed 9 --mode full --out " +
                path("a")),
            0);
  const json d = json::parse(read_file(path("a/divergence.json")).value());
  EXPECT_EQ(d["seed"], 9);
  EXPECT_EQ(d["mode"], "full");
  EXPECT_EQ(d["n_replicates"], 50);
  EXPECT_TRUE(fs::exists(path("a/manifest.json")));
}

TEST_F(Cli, SegmentAndFilterStages) {
  std::string text;
  for (int i = 0; i < 400; ++i) text += "word" + std::string(i % 25 == 24 ? ". " : " ");
  Corpus transcripts = {make_document("t1", DocumentKind::TranscriptSegment, "v1", "neutral", text)};
  write_corpus(transcripts, dir_ / "transcripts.jsonl");
  ASSERT_EQ(run("segment --in " + path("transcripts.jsonl") + " --target-words 100 --out " + path("s")), 0);
  const Corpus segments = read_corpus(path("s/segments.jsonl"));
  EXPECT_EQ(segments.size(), 4u);
  EXPECT_EQ(segments[0].id, "t1#1");
  const json report = json::parse(read_file(path("s/segment_report.json")).value());
  EXPECT_EQ(report["config_hash"].get<std::string>().size(), 64u);

  Corpus comments = {make_document("c1", DocumentKind::Comment, "v1", "neutral", "too short"),
                     make_document("c2", DocumentKind::Comment, "v1", "neutral", text)};
  write_corpus(comments, dir_ / "comments.jsonl");
  ASSERT_EQ(run("filter --in " + path("comments.jsonl") + " --min 3 --max 1000 --out " + path("f")), 0);
  EXPECT_EQ(read_corpus(path("f/filtered.jsonl")).size(), 1u);
  EXPECT_EQ(run("filter --in " + path("comments.jsonl") + " --min 30 --max 3 --out " + path("f")), 2);
}

TEST_F(Cli, RobustnessAndAgreement) {
  const std::string corpus = synth();
  write("cfg.json", R"({"resampling": {"n_replicates": 20}})");
  ASSERT_EQ(run("robustness --config " + path("cfg.json") + " --in " + corpus + " --variant drop:idf,hamas --out " +
                path("r")),
            0);
  EXPECT_TRUE(fs::exists(path("r/drop_idf_hamas/divergence.json")));
  EXPECT_EQ(run("robustness --config " + path("cfg.json") + " --in " + corpus + " --variant drop:idf,nobody --out " +
                path("r")),
            2);
  EXPECT_EQ(run("robustness --in " + corpus + " --variant segment:250 --out " + path("r")), 2);

  ASSERT_EQ(run("agreement a=" + corpus + " b=" + corpus + " --out " + path("g")), 0);
  const json j = json::parse(read_file(path("g/agreement.json")).value());
  EXPECT_DOUBLE_EQ(j["average"]["alpha"].get<double>(), 1.0);
  EXPECT_EQ(run("agreement " + corpus + " --out " + path("g")), 2);
}

TEST_F(Cli, AnnotateWithoutEndpointExitsThree) {
  Corpus corpus = {make_document("a", DocumentKind::Comment, "v", "neutral", "some words here")};
  write_corpus(corpus, dir_ / "raw.jsonl");
  write("cfg.json", R"({"annotation": {"max_retries": 0, "backoff_ms": 0, "timeout_seconds": 2}})");
  EXPECT_EQ(run("annotate --config " + path("cfg.json") + " --in " + path("raw.jsonl") +
                " --endpoint http://127.0.0.1:9 --cache " + path("cache") + " --out " + path("n")),
            3);
  const json report = json::parse(read_file(path("n/annotation_report.json")).value());
  EXPECT_EQ(report["n_failed"], 1);
}

TEST_F(Cli, HarvestNeedsKey) {
  ::unsetenv("YOUTUBE_API_KEY");
  EXPECT_EQ(run("harvest --group neutral --out " + path("h")), 2);
}

}  // namespace
}  // namespace narrapol
