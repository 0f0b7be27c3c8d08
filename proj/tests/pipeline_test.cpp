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

#include "narrapol/pipeline.hpp"

#include <gtest/gtest.h>

#include "narrapol/synth.hpp"

namespace narrapol {
namespace {

GroupSpec group_spec(std::string group, DocumentKind kind, std::int64_t n, double p_is) {
  GroupSpec g;
  g.group = std::move(group);
  g.kind = kind;
  g.n_documents = n;
  g.n_videos = 25;
  g.object_marginals = {{"violence", 0.6}, {"peace", 0.4}};
  g.subject_sides["violence"] = {p_is, 1.0 - p_is, 0.0};
  g.motifs.push_back({Side::IS, "violence", 0.3, 0.0, 0.0});
  g.missingness[static_cast<std::size_t>(ActantRole::Helper)] = 0.5;
  return g;
}

SynthParams two_groups(std::int64_t n, std::uint64_t seed = 3) {
  SynthParams p;
  p.seed = seed;
  for (auto kind : {DocumentKind::Comment, DocumentKind::TranscriptSegment}) {
    p.groups.push_back(group_spec("israeli-leaning", kind, n, 0.8));
    p.groups.push_back(group_spec("palestinian-leaning", kind, n, 0.3));
  }
  p.groups.push_back(group_spec("neutral", DocumentKind::Comment, n / 2, 0.5));
  return p;
}

RunConfig small_config() {
  RunConfig c = RunConfig::defaults();
  c.resampling.n_replicates = 200;
  c.resampling.seed = 11;
  return c;
}

json artifact(const Bundle& b, std::string_view name) {
  const Artifact* a = b.find(name);
  if (!a) throw std::runtime_error("missing artifact " + std::string(name));
  return json::parse(a->content);
}

const json* object_row(const json& divergence, std::string_view kind, std::string_view object) {
  for (const auto& row : divergence["kinds"][std::string(kind)]["objects"]) {
    if (row["object"] == object) return &row;
  }
  return nullptr;
}

TEST(Analyze, EmitsEveryArtifactWithStamp) {
  const auto config = small_config();
  const Bundle b = run_analyze(config, generate(two_groups(300)));
  for (const char* name : {"heatmap", "overlap", "divergence", "role_divergence", "motifs", "group_stats",
                           "missingness", "attribution_shares"}) {
    SCOPED_TRACE(name);
    const json j = artifact(b, std::string(name) + ".json");
    EXPECT_EQ(j["artifact"], name);
    EXPECT_EQ(j["config_hash"], config.hash());
    EXPECT_EQ(j["seed"], 11);
    EXPECT_NE(b.find(std::string(name) + ".csv"), nullptr);
  }
  const json manifest = artifact(b, "manifest.json");
  EXPECT_EQ(manifest["files"].size(), b.files.size() - 1);
  for (const auto& f : manifest["files"]) {
    EXPECT_EQ(f["sha256"], sha256_hex(b.find(f["name"].get<std::string>())->content));
  }
  EXPECT_EQ(b.files.back().name, "manifest.json");
}

TEST(Analyze, DivergenceMatchesMetricAndPlantedValue) {
  const auto params = two_groups(1500);
  const Corpus corpus = generate(params);
  const Bundle b = run_analyze(small_config(), corpus);
  const json d = artifact(b, "divergence.json");

  std::vector<const Document*> il, pl;
  for (const auto& doc : corpus) {
    if (doc.kind != DocumentKind::Comment) continue;
    if (doc.group == "israeli-leaning") il.push_back(&doc);
    if (doc.group == "palestinian-leaning") pl.push_back(&doc);
  }
  const Taxonomy taxonomy = Taxonomy::paper_default();
  const auto& map = taxonomy.side_map();
  for (const char* object : {"violence", "peace"}) {
    SCOPED_TRACE(object);
    const json* row = object_row(d, "comment", object);
    ASSERT_NE(row, nullptr);
    auto direct = subject_divergence(il, pl, object, map, DivergenceMode::Reduced);
    EXPECT_DOUBLE_EQ((*row)["estimate"].get<double>(), direct);
    EXPECT_LE((*row)["ci_low"].get<double>(), (*row)["estimate"].get<double>());
    EXPECT_GE((*row)["ci_high"].get<double>(), (*row)["estimate"].get<double>());
    EXPECT_GE((*row)["bonferroni"].get<double>(), (*row)["p"].get<double>());
  }
  const auto expected = expected_divergence(params, DocumentKind::Comment, "israeli-leaning", "palestinian-leaning");
  EXPECT_NEAR((*object_row(d, "comment", "violence"))["estimate"].get<double>(), expected.reduced.at("violence"),
              0.06);
  EXPECT_LT((*object_row(d, "comment", "violence"))["p"].get<double>(), 0.01);
  EXPECT_DOUBLE_EQ((*object_row(d, "comment", "violence"))["p"].get<double>(), 1.0 / 201.0);
}

TEST(Analyze, JointPermutationAgreesOnStrongEffect) {
  auto config = small_config();
  config.analysis.permutation = PermutationMode::Joint;
  const json d = artifact(run_analyze(config, generate(two_groups(600))), "divergence.json");
  EXPECT_EQ(d["permutation"], "joint");
  EXPECT_DOUBLE_EQ((*object_row(d, "transcript_segment", "violence"))["p"].get<double>(), 1.0 / 201.0);
}

TEST(Analyze, ByteIdenticalAcrossRuns) {
  const Corpus corpus = generate(two_groups(400));
  auto config = small_config();
  const Bundle a = run_analyze(config, corpus);
  config.resampling.threads = 3;
  const Bundle b = run_analyze(config, corpus);
  ASSERT_EQ(a.files.size(), b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    if (a.files[i].name == "manifest.json") continue;
    EXPECT_EQ(a.files[i].content, b.files[i].content) << a.files[i].name;
  }
}

TEST(Analyze, WritesBundleToDisk) {
  const auto dir = std::filesystem::temp_directory_path() / "narrapol_pipeline_write";
  std::filesystem::remove_all(dir);
  const Bundle b = run_analyze(small_config(), generate(two_groups(200)));
  b.write(dir);
  for (const auto& f : b.files) EXPECT_EQ(read_file(dir / f.name).value_or(""), f.content);
  std::filesystem::remove_all(dir);
}

TEST(Analyze, StageOrderAndGroupErrors) {
  Corpus corpus = generate(two_groups(100));
  corpus[5].frame.reset();
  EXPECT_THROW(run_analyze(small_config(), corpus), DataContractError);

  corpus[5].annotation_error = "timeout";
  const Bundle b = run_analyze(small_config(), corpus);
  std::int64_t failed = 0;
  const json missing = artifact(b, "missingness.json");
  for (const auto& s : missing["slices"]) {
    if (s["scope"] == "all") failed += s["failed"].get<std::int64_t>();
  }
  EXPECT_EQ(failed, 1);

  Corpus one_sided;
  for (const auto& doc : generate(two_groups(100))) {
    if (doc.group != "palestinian-leaning") one_sided.push_back(doc);
  }
  EXPECT_THROW(run_analyze(small_config(), one_sided), ConfigError);
}

TEST(Analyze, OverlapRowsCoverWithinAndBetween) {
  const json o = artifact(run_analyze(small_config(), generate(two_groups(200))), "overlap.json");
  EXPECT_EQ(o["within"].size(), 2u);  // neutral has no transcripts here
  EXPECT_EQ(o["between"].size(), 2u);
  for (const auto& row : o["between"]) {
    EXPECT_GE(row["overlap"].get<double>(), 0.0);
    EXPECT_LE(row["overlap"].get<double>(), 1.0);
  }
}

TEST(Analyze, MotifAndRoleRowsAreComplete) {
  const Bundle b = run_analyze(small_config(), generate(two_groups(300)));
  const json m = artifact(b, "motifs.json");
  const std::size_t objects = Taxonomy::paper_default().objects().size();
  EXPECT_EQ(m["kinds"]["comment"].size(), 2 * objects * 3);
  const json r = artifact(b, "role_divergence.json");
  EXPECT_EQ(r["kinds"]["comment"].size(), 2 * objects * 3);
  for (const auto& row : r["kinds"]["comment"]) {
    if (row["estimate"].is_null()) EXPECT_TRUE(row["low_support"].get<bool>());
  }
}

TEST(Robustness, DropPairChangesSidesOnly) {
  const Corpus corpus = generate(two_groups(300));
  const auto config = small_config();
  const Taxonomy taxonomy = Taxonomy::paper_default();
  const auto& map = taxonomy.side_map();
  const auto is = map.members(Side::IS), pa = map.members(Side::PA);
  ASSERT_FALSE(is.empty());
  ASSERT_FALSE(pa.empty());
  const auto variant = RobustnessVariant::drop_pair(is.front(), pa.front());
  const Bundle b = run_robustness(config, corpus, Taxonomy::paper_default(), variant);
  const json d = artifact(b, "divergence.json");
  EXPECT_EQ(d["variant"], variant.label());
  EXPECT_EQ(artifact(b, "group_stats.json")["groups"], artifact(run_analyze(config, corpus), "group_stats.json")["groups"]);

  Taxonomy once = Taxonomy::paper_default();
  once.set_side_map(map.without_pair(is.front(), pa.front()));
  const Bundle twice = run_robustness(config, corpus, once, variant);
  EXPECT_EQ(artifact(twice, "divergence.json")["kinds"], d["kinds"]);
}

TEST(Robustness, ParseVariants) {
  EXPECT_EQ(RobustnessVariant::parse("segment:250").target_words, 250);
  const auto drop = RobustnessVariant::parse("drop:idf,hamas");
  EXPECT_EQ(drop.first, "idf");
  EXPECT_EQ(drop.second, "hamas");
  EXPECT_THROW(RobustnessVariant::parse("segment:0"), ConfigError);
  EXPECT_THROW(RobustnessVariant::parse("segment:12x"), ConfigError);
  EXPECT_THROW(RobustnessVariant::parse("drop:idf"), ConfigError);
  EXPECT_THROW(RobustnessVariant::parse("shuffle"), ConfigError);
}

TEST(Robustness, SegmentVariantReannotates) {
  Corpus corpus = generate(two_groups(200));
  Corpus transcripts;
  std::string words;
  for (int i = 0; i < 400; ++i) words += "word" + std::to_string(i) + (i % 20 == 19 ? ". " : " ");
  for (const char* group : {"israeli-leaning", "palestinian-leaning"}) {
    for (int v = 0; v < 3; ++v) {
      transcripts.push_back(make_document(std::string(group) + "-t" + std::to_string(v),
                                          DocumentKind::TranscriptSegment, std::string(group) + "-v" + std::to_string(v),
                                          group, words));
    }
  }
  int calls = 0;
  Annotator annotate = [&](const Corpus& segments) {
    ++calls;
    Corpus out = segments;
    for (std::size_t i = 0; i < out.size(); ++i) {
      ActantFrame f;
      f.subject = i % 2 ? "idf" : "hamas";
      f.object = "violence";
      out[i].frame = f;
    }
    return out;
  };
  const Bundle b = run_robustness(small_config(), corpus, Taxonomy::paper_default(),
                                  RobustnessVariant::segment_target(100), {&transcripts, annotate});
  EXPECT_EQ(calls, 1);
  ASSERT_NE(b.find("segments.jsonl"), nullptr);
  std::istringstream in(b.find("segments.jsonl")->content);
  const Corpus segments = parse_corpus(in);
  EXPECT_EQ(segments.size(), 6u * 4u);
  const json manifest = artifact(b, "manifest.json");
  EXPECT_EQ(manifest["files"].size(), b.files.size() - 1);
  EXPECT_THROW(run_robustness(small_config(), corpus, Taxonomy::paper_default(), RobustnessVariant::segment_target(100)),
               ConfigError);
}

TEST(Agreement, IdenticalCodersScoreOne) {
  const Corpus corpus = generate(two_groups(60));
  const Bundle b = run_agreement(small_config(), {{"a", corpus}, {"b", corpus}});
  const json j = artifact(b, "agreement.json");
  EXPECT_DOUBLE_EQ(j["average"]["f1_micro"].get<double>(), 1.0);
  const std::string csv = b.find("agreement.csv")->content;
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "actant,f1_micro,f1_weighted,f1_macro,alpha");
  EXPECT_NE(csv.find("\naverage,1.0,1.0,1.0,"), std::string::npos);
}

}  // namespace
}  // namespace narrapol
