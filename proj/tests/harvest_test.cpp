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

#include "narrapol/harvest.hpp"

#include <filesystem>
#include <map>

#include <gtest/gtest.h>

namespace narrapol {
namespace {

namespace fs = std::filesystem;

std::string fixture(const std::string& name) {
  auto text = read_file(fs::path(NARRAPOL_FIXTURE_DIR) / "youtube" / name);
  if (!text) throw std::runtime_error("missing fixture " + name);
  return *text;
}

std::string param(const HttpRequest& req, const std::string& key) {
  for (const auto& [k, v] : req.query) {
    if (k == key) return v;
  }
  return "";
}

// Replays recorded responses keyed on endpoint and parameters.
struct Replay {
  std::vector<HttpRequest> seen;

  HttpResponse operator()(const HttpRequest& req) {
    seen.push_back(req);
    const std::string video = param(req, "videoId");
    if (req.path == "/youtube/v3/search") return {200, fixture("search.json"), {}};
    if (req.path == "/youtube/v3/videos") return {200, fixture("videos.json"), {}};
    if (video == "vidR") return {200, fixture("threads_with_replies.json"), {}};
    if (video == "vidP") {
      return {200, fixture(param(req, "pageToken") == "TOKEN_PAGE_2" ? "threads_page2.json" : "threads_page1.json"), {}};
    }
    if (video == "vidOff") return {403, fixture("comments_disabled.json"), {}};
    if (video == "vidGone") return {404, fixture("video_not_found.json"), {}};
    if (video == "vidQuota") return {403, fixture("quota_exceeded.json"), {}};
    if (video == "vidKey") return {400, fixture("key_invalid.json"), {}};
    if (video == "vidJunk") return {200, "<html>oops</html>", {}};
    return {500, "{}", {}};
  }
};

YouTubeOptions options(fs::path cache = {}) {
  YouTubeOptions o;
  o.api_key = "SECRET";
  o.cache_dir = std::move(cache);
  o.requests_per_second = 0;
  return o;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("narrapol_harvest_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(HarvestComments, RepliesAreNeverEmitted) {
  auto replay = std::make_shared<Replay>();
  YouTubeClient client(options(), [replay](const HttpRequest& r) { return (*replay)(r); });
  auto got = client.comments("vidR", "neutral");
  ASSERT_EQ(got.comments.size(), 3u);
  for (const auto& d : got.comments) {
    EXPECT_EQ(d.kind, DocumentKind::Comment);
    EXPECT_EQ(d.video_id, "vidR");
    EXPECT_EQ(d.group, "neutral");
    EXPECT_EQ(d.id.find(".r"), std::string::npos);
    EXPECT_TRUE(d.published_at);
  }
  EXPECT_EQ(got.comments[0].text, "comment number 0 on the video");
  EXPECT_EQ(got.comments[0].word_count, 6);
  EXPECT_EQ(param(replay->seen.at(0), "key"), "SECRET");
}

TEST(HarvestComments, FollowsPageTokens) {
  auto replay = std::make_shared<Replay>();
  YouTubeClient client(options(), [replay](const HttpRequest& r) { return (*replay)(r); });
  auto got = client.comments("vidP", "g");
  EXPECT_EQ(got.comments.size(), 150u);
  EXPECT_EQ(replay->seen.size(), 2u);
  EXPECT_EQ(param(replay->seen[1], "pageToken"), "TOKEN_PAGE_2");
  EXPECT_EQ(got.comments.back().id, "vidP-c149");
}

TEST(HarvestComments, DisabledYieldsEmptyWithWarning) {
  YouTubeClient client(options(), Replay{});
  auto got = client.comments("vidOff", "g");
  EXPECT_TRUE(got.comments.empty());
  EXPECT_TRUE(got.comments_disabled);
  ASSERT_EQ(got.warnings.size(), 1u);
}

TEST(HarvestComments, TypedErrors) {
  YouTubeClient client(options(), Replay{});
  EXPECT_THROW(client.comments("vidGone", "g"), NotFoundError);
  EXPECT_THROW(client.comments("vidKey", "g"), AuthError);
  EXPECT_THROW(client.comments("vidJunk", "g"), UpstreamError);
  EXPECT_THROW(client.comments("", "g"), ConfigError);
  try {
    client.comments("vidQuota", "g");
    FAIL() << "expected a quota error";
  } catch (const QuotaError& e) {
    EXPECT_GT(e.retry_after_seconds(), 0);
    EXPECT_NE(std::string(e.what()).find("quotaExceeded"), std::string::npos);
  }
}

TEST(HarvestComments, RetryAfterHeaderWins) {
  YouTubeClient client(options(), [](const HttpRequest&) {
    return HttpResponse{403, fixture("quota_exceeded.json"), {{"retry-after", "120"}}};
  });
  try {
    client.comments("v", "g");
    FAIL();
  } catch (const QuotaError& e) {
    EXPECT_EQ(e.retry_after_seconds(), 120);
  }
}

TEST(HarvestSearch, TopResultsWithStatistics) {
  auto replay = std::make_shared<Replay>();
  YouTubeClient client(options(), [replay](const HttpRequest& r) { return (*replay)(r); });
  HarvestConstraints c;
  auto got = client.search("israel palestine explained", c);
  ASSERT_EQ(got.videos.size(), 20u);
  EXPECT_EQ(got.warnings.size(), 1u);  // the channel result
  EXPECT_EQ(got.videos[0].id, "vid00");
  EXPECT_EQ(got.videos[0].query, "israel palestine explained");
  EXPECT_EQ(got.videos[0].view_count, 1000);
  EXPECT_EQ(got.videos[3].comment_count, 15);
  EXPECT_FALSE(got.videos[5].view_count);
  const auto& req = replay->seen.at(0);
  EXPECT_EQ(param(req, "maxResults"), "20");
  EXPECT_EQ(param(req, "videoDuration"), "medium");
  EXPECT_EQ(param(req, "type"), "video");
  EXPECT_THROW(client.search("", c), ConfigError);
  c.published_before = c.published_after;
  EXPECT_THROW(client.search("q", c), ConfigError);
}

TEST(HarvestCache, SecondRunReplaysFromDiskWithoutKey) {
  const auto dir = scratch("cache");
  auto replay = std::make_shared<Replay>();
  {
    YouTubeClient client(options(dir), [replay](const HttpRequest& r) { return (*replay)(r); });
    EXPECT_EQ(client.comments("vidP", "g").comments.size(), 150u);
  }
  EXPECT_EQ(replay->seen.size(), 2u);
  int files = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    ++files;
    EXPECT_EQ(read_file(entry.path())->find("SECRET"), std::string::npos);
  }
  EXPECT_EQ(files, 2);

  auto other = options(dir);
  other.api_key = "ANOTHER";
  YouTubeClient again(other, [](const HttpRequest&) -> HttpResponse {
    throw std::logic_error("network touched");
  });
  EXPECT_EQ(again.comments("vidP", "g").comments.size(), 150u);
  EXPECT_EQ(again.requests_sent(), 0);
  fs::remove_all(dir);
}

TEST(HarvestCache, FingerprintIgnoresKeyAndOrder) {
  EXPECT_EQ(request_fingerprint("/p", {{"b", "2"}, {"key", "x"}, {"a", "1"}}),
            request_fingerprint("/p", {{"a", "1"}, {"b", "2"}, {"key", "y"}}));
  EXPECT_EQ(request_fingerprint("/p", {{"b", "2"}, {"a", "1"}}), "/p?a=1&b=2");
}

TEST(HarvestHttp, LocalServerRoundTrip) {
  httplib::Server server;
  server.Get("/youtube/v3/commentThreads", [](const httplib::Request& req, httplib::Response& res) {
    if (req.get_param_value("key") != "SECRET") {
      res.status = 400;
      res.set_content(fixture("key_invalid.json"), "application/json");
      return;
    }
    const bool second = req.get_param_value("pageToken") == "TOKEN_PAGE_2";
    res.set_content(fixture(second ? "threads_page2.json" : "threads_page1.json"), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto o = options();
  o.base_url = "http://127.0.0.1:" + std::to_string(port);
  YouTubeClient client(o);
  EXPECT_EQ(client.comments("vidP", "g").comments.size(), 150u);
  o.api_key = "WRONG";
  YouTubeClient bad(o);
  EXPECT_THROW(bad.comments("vidP", "g"), AuthError);

  server.stop();
  thread.join();
}

TEST(HarvestHttp, KeyFromEnvironment) {
  ::unsetenv("NARRAPOL_TEST_KEY");
  EXPECT_THROW(youtube_key_from_env("NARRAPOL_TEST_KEY"), ConfigError);
  ::setenv("NARRAPOL_TEST_KEY", "abc", 1);
  EXPECT_EQ(youtube_key_from_env("NARRAPOL_TEST_KEY"), "abc");
}

}  // namespace
}  // namespace narrapol
