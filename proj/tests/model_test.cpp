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

#include "narrapol/model.hpp"

#include <fstream>
#include <random>

#include <gtest/gtest.h>

namespace narrapol {
namespace {

TEST(Canonicalize, CaseFoldAndAlias) {
  const auto tax = Taxonomy::paper_default();
  EXPECT_EQ(tax.canonicalize("Israel").token, "israel/israelis");
  EXPECT_EQ(tax.canonicalize("  the   IDF ").token, "idf");
  EXPECT_EQ(tax.canonicalize("Israel/Israelis").kind, LabelKind::Actor);
  EXPECT_EQ(tax.canonicalize("Land").token, "territory");
  EXPECT_EQ(tax.canonicalize("Land").kind, LabelKind::Object);
}

TEST(Canonicalize, MissReportsRawString) {
  const auto tax = Taxonomy::paper_default();
  auto result = tax.canonicalize("Belgium");
  EXPECT_EQ(result.token, "unknown");
  EXPECT_EQ(result.kind, LabelKind::Unknown);
  ASSERT_TRUE(result.miss.has_value());
  EXPECT_EQ(result.miss->raw, "Belgium");
  EXPECT_EQ(result.miss->folded, "belgium");
}

TEST(Canonicalize, ReservedUnknownIsNotAMiss) {
  const auto tax = Taxonomy::paper_default();
  auto result = tax.canonicalize("Unknown");
  EXPECT_EQ(result.token, "unknown");
  EXPECT_FALSE(result.miss.has_value());
}

TEST(Canonicalize, Idempotent) {
  const auto tax = Taxonomy::paper_default();
  std::vector<std::string> inputs = {"Belgium", "", "   ", "ISRAEL", "u.s.", "Hamas "};
  for (const auto& [alias, target] : tax.aliases()) inputs.push_back(alias);
  for (const auto& a : tax.actors()) inputs.push_back(a);
  std::mt19937 rng(7);
  const std::string alphabet = "abcdeisrlAHMS /.";
  for (int i = 0; i < 500; ++i) {
    std::string s;
    for (int k = 0, n = static_cast<int>(rng() % 12); k < n; ++k) s += alphabet[rng() % alphabet.size()];
    inputs.push_back(s);
  }
  for (const auto& raw : inputs) {
    auto once = tax.canonicalize(raw).token;
    EXPECT_EQ(tax.canonicalize(once).token, once) << "raw='" << raw << "'";
  }
}

TEST(SideOf, PaperAssignments) {
  const auto map = Taxonomy::paper_default().side_map();
  EXPECT_EQ(side_of("idf", map), Side::IS);
  EXPECT_EQ(side_of("hamas", map), Side::PA);
  EXPECT_EQ(side_of("un", map), Side::UNK);
  EXPECT_EQ(side_of("both sides", map), Side::UNK);
  EXPECT_EQ(side_of("not-a-label", map), Side::UNK);
}

TEST(SideOf, TotalOverTaxonomy) {
  const auto tax = Taxonomy::paper_default();
  for (const auto& actor : tax.actors()) {
    Side s = side_of(actor, tax.side_map());
    EXPECT_TRUE(s == Side::IS || s == Side::PA || s == Side::UNK);
    EXPECT_TRUE(tax.side_map().contains(actor));
  }
}

TEST(SideOf, DefaultPartitionIsFourAndFour) {
  const auto map = Taxonomy::paper_default().side_map();
  EXPECT_EQ(map.members(Side::IS),
            (std::vector<std::string>{"idf", "israel/israelis", "jews", "zionists"}));
  EXPECT_EQ(map.members(Side::PA),
            (std::vector<std::string>{"arabs", "hamas", "muslims", "palestine/palestinians"}));
}

TEST(SideMap, DropPairIsIdempotentAndChecksMembership) {
  const auto map = Taxonomy::paper_default().side_map();
  auto once = map.without_pair("idf", "hamas");
  EXPECT_EQ(once.members(Side::IS).size(), 3u);
  EXPECT_EQ(once.members(Side::PA).size(), 3u);
  EXPECT_EQ(once.without_pair("idf", "hamas"), once);
  EXPECT_THROW(map.without_pair("idf", "belgium"), ConfigError);
}

TEST(MetaSubject, OnlyMetaActorsCount) {
  ActantFrame frame;
  EXPECT_FALSE(is_meta_subject(frame));
  frame.subject = "video creator";
  EXPECT_TRUE(is_meta_subject(frame));
  frame.subject = "audience/commenter";
  EXPECT_TRUE(is_meta_subject(frame));
  frame.subject = "israel/israelis";
  EXPECT_FALSE(is_meta_subject(frame));
}

TEST(Taxonomy, RejectsConflictingAliases) {
  json j = {{"actors", {"idf", "hamas"}},
            {"objects", {"violence"}},
            {"aliases", {{"Army", "idf"}, {"army", "hamas"}}}};
  EXPECT_THROW(Taxonomy::from_json(j), ConfigError);
}

TEST(Taxonomy, RejectsDanglingAliasAndDuplicateActors) {
  EXPECT_THROW(Taxonomy::from_json({{"actors", {"idf"}}, {"objects", json::array()},
                                    {"aliases", {{"x", "nobody"}}}}),
               ConfigError);
  EXPECT_THROW(Taxonomy::from_json({{"actors", {"IDF", "idf "}}, {"objects", json::array()}}),
               ConfigError);
  EXPECT_THROW(Taxonomy::from_json({{"actors", {"idf"}}, {"objects", {"land"}}}), ConfigError);
  EXPECT_THROW(Taxonomy::from_json({{"actors", {"idf"}}, {"objects", json::array()},
                                    {"side_map", {{"idf", "XX"}}}}),
               ConfigError);
}

TEST(Taxonomy, ShippedFileMatchesBuiltInDefault) {
  std::ifstream in(std::string(NARRAPOL_SOURCE_DIR) + "/data/taxonomy.json");
  ASSERT_TRUE(in.good());
  auto shipped = Taxonomy::from_json(json::parse(in));
  EXPECT_EQ(shipped.to_json(), Taxonomy::paper_default().to_json());
}

TEST(Taxonomy, ValidateFrame) {
  const auto tax = Taxonomy::paper_default();
  ActantFrame ok;
  ok.subject = "hamas";
  ok.object = "violence";
  ok.sender = "unknown";
  EXPECT_NO_THROW(tax.validate(ok));
  ActantFrame bad_object = ok;
  bad_object.object = "hamas";
  EXPECT_THROW(tax.validate(bad_object), DataContractError);
  ActantFrame bad_actor = ok;
  bad_actor.receiver = "violence";
  EXPECT_THROW(tax.validate(bad_actor), DataContractError);
}

TEST(Frame, JsonRoundTripKeepsNulls) {
  ActantFrame frame;
  frame.subject = "jews";
  frame.opponent = "iran";
  auto j = frame_to_json(frame);
  EXPECT_TRUE(j.at("sender").is_null());
  EXPECT_EQ(frame_from_json(j), frame);
  EXPECT_THROW(frame_from_json({{"villain", "x"}}), DataContractError);
  EXPECT_THROW(frame_from_json({{"subject", json::array({"a", "b"})}}), DataContractError);
}

}  // namespace
}  // namespace narrapol
