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

#include "narrapol/annotate.hpp"

#include <atomic>
#include <filesystem>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

namespace narrapol {
namespace {

namespace fs = std::filesystem;

const Taxonomy& taxonomy() {
  static const Taxonomy t = Taxonomy::paper_default();
  return t;
}

TEST(Prompt, DeterministicAndComplete) {
  auto doc = make_document("d1", DocumentKind::Comment, "v", "g", "The army wants security.");
  PromptTemplate tmpl;
  const auto a = build_prompt(doc, taxonomy(), tmpl);
  EXPECT_EQ(a, build_prompt(doc, taxonomy(), tmpl));
  for (const auto& actor : taxonomy().actors()) EXPECT_NE(a.find('"' + actor + '"'), std::string::npos) << actor;
  for (const auto& object : taxonomy().objects()) EXPECT_NE(a.find('"' + object + '"'), std::string::npos);
  EXPECT_NE(a.find("The army wants security."), std::string::npos);
  EXPECT_EQ(a.find("{{"), std::string::npos);
  EXPECT_EQ(prompt_hash(taxonomy(), tmpl), prompt_hash(taxonomy(), tmpl));
  EXPECT_EQ(prompt_hash(taxonomy(), tmpl).size(), 64u);
}

TEST(Prompt, ShippedTemplateMatchesBuiltIn) {
  auto shipped = PromptTemplate::load(fs::path(NARRAPOL_SOURCE_DIR) / "data" / "prompt_template.txt");
  EXPECT_EQ(shipped.text, PromptTemplate{}.text);
}

TEST(Prompt, LargerTaxonomyFullyListed) {
  auto j = taxonomy().to_json();
  for (const char* extra : {"settlers", "egypt", "qatar", "hezbollah"}) j["actors"].push_back(extra);
  auto big = Taxonomy::from_json(j);
  ASSERT_EQ(big.actors().size(), 21u);
  auto prompt = build_prompt(make_document("d", DocumentKind::Comment, "v", "g", "x"), big, PromptTemplate{});
  for (const auto& actor : big.actors()) EXPECT_NE(prompt.find('"' + actor + '"'), std::string::npos);
}

TEST(Prompt, TemplateErrors) {
  auto doc = make_document("d", DocumentKind::Comment, "v", "g", "x");
  EXPECT_THROW(build_prompt(doc, taxonomy(), PromptTemplate{"subject object sender receiver helper opponent {{actors}} {{objects}}"}),
               ConfigError);
  EXPECT_THROW(build_prompt(doc, taxonomy(), PromptTemplate{"subject object sender receiver opponent {{actors}} {{objects}} {{document}}"}),
               ConfigError);
  // Placeholders inside the document text stay literal.
  auto tricky = make_document("d", DocumentKind::Comment, "v", "g", "see {{actors}}");
  auto prompt = build_prompt(tricky, taxonomy(), PromptTemplate{});
  EXPECT_NE(prompt.find("see {{actors}}"), std::string::npos);
}

TEST(ParseResponse, SixKeys) {
  auto raw = parse_response(
      R"({"subject": "Israelis", "object": "land", "sender": "the UN", "receiver": "Palestinians", "helper": "US", "opponent": "Hamas"})",
      "m");
  for (auto role : kAllRoles) EXPECT_TRUE(raw.of(role)) << role_name(role);
  EXPECT_EQ(*raw.of(ActantRole::Subject), "Israelis");
  EXPECT_EQ(raw.model, "m");
  EXPECT_EQ(raw.response_sha256.size(), 64u);
}

TEST(ParseResponse, AbsentRolesBecomeNull) {
  auto raw = parse_response(R"({"subject": "hamas", "object": "power", "receiver": null, "helper": "", "opponent": "None"})");
  EXPECT_TRUE(raw.of(ActantRole::Subject));
  EXPECT_FALSE(raw.of(ActantRole::Sender));
  EXPECT_FALSE(raw.of(ActantRole::Receiver));
  EXPECT_FALSE(raw.of(ActantRole::Helper));
  EXPECT_FALSE(raw.of(ActantRole::Opponent));
}

TEST(ParseResponse, ReasoningPreambleIgnored) {
  auto raw = parse_response(
      "<think>The subject could be {the army}... or maybe {\"subject\": \"x\"}</think>\n"
      "Final answer:\n```json\n{\"subject\": \"idf\", \"object\": \"security\"}\n```");
  EXPECT_EQ(*raw.of(ActantRole::Subject), "idf");
  EXPECT_EQ(*raw.of(ActantRole::Object), "security");
  auto no_think = parse_response("Let me think {not json}. {\"subject\": \"jews\", \"object\": \"peace\"}");
  EXPECT_EQ(*no_think.of(ActantRole::Subject), "jews");
}

TEST(ParseResponse, Errors) {
  EXPECT_THROW(parse_response("I cannot determine the roles."), ResponseParseError);
  EXPECT_THROW(parse_response(R"({"subject": "a", "subject": "b"})"), ResponseParseError);
  EXPECT_THROW(parse_response(R"({"subject": "a", "Subject": "b"})"), ResponseParseError);
  EXPECT_THROW(parse_response(R"({"subject": "a", "mood": "angry"})"), ResponseParseError);
  EXPECT_THROW(parse_response(R"({"subject": ["a", "b"]})"), ResponseParseError);
  EXPECT_THROW(parse_response(R"({"subject": 3})"), ResponseParseError);
}

TEST(NormalizeFrame, AliasesAndMisses) {
  auto raw = parse_response(
      R"({"subject": "Israelis", "object": "land", "sender": "Martians", "receiver": "unknown", "helper": "violence", "opponent": "the IDF"})");
  auto n = normalize_frame(raw, taxonomy());
  EXPECT_EQ(n.frame.subject, "israel/israelis");
  EXPECT_EQ(n.frame.object, "territory");
  EXPECT_EQ(n.frame.sender, "unknown");
  EXPECT_EQ(n.frame.receiver, "unknown");
  EXPECT_EQ(n.frame.helper, "unknown");
  EXPECT_EQ(n.frame.opponent, "idf");
  ASSERT_EQ(n.misses.size(), 2u);
  EXPECT_EQ(n.misses[0].raw, "Martians");
  EXPECT_EQ(n.misses[0].role, "sender");
  EXPECT_EQ(n.misses[1].role, "helper");

  auto bad_object = normalize_frame(parse_response(R"({"subject": "hamas", "object": "cake"})"), taxonomy());
  EXPECT_FALSE(bad_object.frame.object);
  ASSERT_EQ(bad_object.misses.size(), 1u);
  EXPECT_EQ(bad_object.misses[0].raw, "cake");

  auto empty = normalize_frame(parse_response("{}"), taxonomy());
  EXPECT_TRUE(empty.frame.empty());
  EXPECT_TRUE(empty.misses.empty());
}

// Chat endpoint that answers from the document text: "fail" always errors,
// "flaky" errors on its first request only.
class MockEndpoint {
 public:
  MockEndpoint() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      if (req.get_header_value("Authorization") == "Bearer bad") {
        res.status = 401;
        return;
      }
      const auto body = json::parse(req.body);
      const std::string prompt = body["messages"][0]["content"];
      temperature_ = body["temperature"].get<double>();
      const std::string doc = prompt.substr(prompt.rfind("Text:\n") + 6);
      if (doc.find("fail") != std::string::npos) {
        res.status = 500;
        return;
      }
      if (doc.find("flaky") != std::string::npos && flaky_seen_.fetch_add(1) == 0) {
        res.status = 503;
        return;
      }
      std::string content;
      if (doc.find("garbage") != std::string::npos) {
        content = "no structured answer here";
      } else {
        content = "<think>reasoning</think>{\"subject\": \"" + std::string(doc.find("hamas") != std::string::npos ? "Hamas" : "Israelis") +
                  "\", \"object\": \"land\", \"sender\": null, \"receiver\": \"Gazans\", \"helper\": null, \"opponent\": \"Martians\"}";
      }
      json reply = {{"id", "x"}, {"choices", json::array({{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}})}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockEndpoint() {
    server_.stop();
    thread_.join();
  }

  EndpointConfig config() const {
    EndpointConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_);
    c.model = "mock-model";
    c.backoff_ms = 1;
    c.concurrency = 1;
    return c;
  }
  int requests() const { return requests_; }
  double temperature() const { return temperature_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::atomic<int> flaky_seen_{0};
  std::atomic<double> temperature_{-1};
};

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("narrapol_annotate_" + name);
  fs::remove_all(dir);
  return dir;
}

Corpus docs(std::initializer_list<std::pair<const char*, const char*>> items) {
  Corpus c;
  for (const auto& [id, text] : items) c.push_back(make_document(id, DocumentKind::Comment, "v", "g", text));
  return c;
}

std::string dump(const Corpus& c) {
  std::ostringstream out;
  write_corpus(c, out);
  return out.str();
}

TEST(AnnotateCorpus, AnnotatesCachesAndSortsById) {
  MockEndpoint mock;
  const auto cache = scratch("cache");
  auto corpus = docs({{"b", "hamas wants land"}, {"a", "israel wants land"}, {"c", "more text"}});
  auto run = annotate_corpus(corpus, taxonomy(), PromptTemplate{}, mock.config(), cache);
  ASSERT_EQ(run.corpus.size(), 3u);
  EXPECT_EQ(run.corpus[0].id, "a");
  EXPECT_EQ(run.corpus[1].id, "b");
  EXPECT_EQ(run.corpus[1].frame->subject, "hamas");
  EXPECT_EQ(run.corpus[0].frame->subject, "israel/israelis");
  EXPECT_EQ(run.corpus[0].frame->object, "territory");
  EXPECT_EQ(run.corpus[0].frame->receiver, "palestine/palestinians");
  EXPECT_EQ(run.corpus[0].frame->opponent, "unknown");
  EXPECT_FALSE(run.corpus[0].frame->sender);
  ASSERT_TRUE(run.corpus[0].provenance);
  EXPECT_EQ(run.corpus[0].provenance->model, "mock-model");
  EXPECT_EQ(run.corpus[0].provenance->prompt_hash, prompt_hash(taxonomy(), PromptTemplate{}));
  EXPECT_EQ(run.report.n_requests, 3);
  EXPECT_EQ(mock.requests(), 3);
  EXPECT_EQ(mock.temperature(), 0.0);
  EXPECT_EQ(run.report.misses.size(), 3u);
  EXPECT_DOUBLE_EQ(run.report.missingness.of(ActantRole::Sender), 1.0);
  EXPECT_DOUBLE_EQ(run.report.missingness.of(ActantRole::Subject), 0.0);

  // Fully cached rerun: no calls, identical bytes.
  auto again = annotate_corpus(corpus, taxonomy(), PromptTemplate{}, mock.config(), cache);
  EXPECT_EQ(mock.requests(), 3);
  EXPECT_EQ(again.report.n_cached, 3);
  EXPECT_EQ(dump(again.corpus), dump(run.corpus));

  // Two new documents: exactly two new requests.
  auto grown = corpus;
  for (auto& d : docs({{"d", "new one"}, {"e", "hamas again"}})) grown.push_back(d);
  auto third = annotate_corpus(grown, taxonomy(), PromptTemplate{}, mock.config(), cache);
  EXPECT_EQ(mock.requests(), 5);
  EXPECT_EQ(third.report.n_requested, 2);
  fs::remove_all(cache);
}

TEST(AnnotateCorpus, FailuresAreRecordedAndRunContinues) {
  MockEndpoint mock;
  const auto cache = scratch("fail");
  auto run = annotate_corpus(docs({{"1", "this will fail"}, {"2", "garbage reply"}, {"3", "flaky doc"}, {"4", "fine"}}),
                             taxonomy(), PromptTemplate{}, mock.config(), cache);
  EXPECT_EQ(run.report.n_failed, 2);
  EXPECT_FALSE(run.corpus[0].frame);
  ASSERT_TRUE(run.corpus[0].annotation_error);
  EXPECT_NE(run.corpus[0].annotation_error->find("500"), std::string::npos);
  EXPECT_FALSE(run.corpus[1].frame);
  EXPECT_TRUE(run.corpus[2].frame);
  EXPECT_TRUE(run.corpus[3].frame);
  // 4 attempts for each failure, 2 for the flaky document, 1 for the last.
  EXPECT_EQ(run.report.n_requests, 4 + 4 + 2 + 1);
  EXPECT_EQ(mock.requests(), 11);

  // Failures are not cached; successes are.
  annotate_corpus(docs({{"1", "this will fail"}, {"4", "fine"}}), taxonomy(), PromptTemplate{}, mock.config(), cache);
  EXPECT_EQ(mock.requests(), 15);
  fs::remove_all(cache);
}

TEST(AnnotateCorpus, ConcurrencyDoesNotChangeOutput) {
  MockEndpoint mock;
  Corpus corpus;
  for (int i = 0; i < 24; ++i) {
    corpus.push_back(make_document("doc" + std::to_string(100 - i), DocumentKind::Comment, "v", "g",
                                   i % 3 ? "israel text" : "hamas text"));
  }
  const auto one = scratch("one"), many = scratch("many");
  auto cfg = mock.config();
  auto serial = annotate_corpus(corpus, taxonomy(), PromptTemplate{}, cfg, one);
  cfg.concurrency = 4;
  auto parallel = annotate_corpus(corpus, taxonomy(), PromptTemplate{}, cfg, many);
  EXPECT_EQ(dump(serial.corpus), dump(parallel.corpus));
  EXPECT_EQ(serial.report.to_json(), parallel.report.to_json());
  fs::remove_all(one);
  fs::remove_all(many);
}

TEST(AnnotateCorpus, BadCredentialsAbort) {
  MockEndpoint mock;
  auto cfg = mock.config();
  cfg.api_key = "bad";
  const auto cache = scratch("auth");
  EXPECT_THROW(annotate_corpus(docs({{"1", "x"}}), taxonomy(), PromptTemplate{}, cfg, cache), AuthError);
  cfg.model = "";
  EXPECT_THROW(annotate_corpus(docs({{"1", "x"}}), taxonomy(), PromptTemplate{}, cfg, cache), ConfigError);
  fs::remove_all(cache);
}

TEST(AnnotateCorpus, CacheKeyDependsOnPromptAndModel) {
  EXPECT_NE(annotation_cache_key("d", "p", "m1"), annotation_cache_key("d", "p", "m2"));
  EXPECT_NE(annotation_cache_key("d", "p", "m"), annotation_cache_key("d", "q", "m"));
  EXPECT_NE(annotation_cache_key("d", "p", "m"), annotation_cache_key("e", "p", "m"));
}

}  // namespace
}  // namespace narrapol
