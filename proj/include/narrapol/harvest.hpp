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

#pragma once

// YouTube Data API v3 client: video search and top-level comment threads.
// Every successful response is cached verbatim under a hash of the request
// (API key excluded), so reruns replay the same data.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "narrapol/corpus.hpp"
#include "narrapol/error.hpp"
#include "narrapol/hash.hpp"
#include "narrapol/http.hpp"
#include "narrapol/ingest.hpp"

namespace narrapol {

inline constexpr const char* kYouTubeKeyVariable = "YOUTUBE_API_KEY";

inline std::string youtube_key_from_env(const char* variable = kYouTubeKeyVariable) {
  const char* key = std::getenv(variable);
  if (!key || !*key) throw ConfigError(std::string("harvest: set ") + variable);
  return key;
}

struct YouTubeOptions {
  std::string api_key;
  std::string base_url = "https://www.googleapis.com";
  std::string api_prefix = "/youtube/v3";
  std::filesystem::path cache_dir;  // empty disables caching
  double requests_per_second = 5.0;
  int comment_page_size = 100;
  std::function<void(std::string_view)> log;  // one line per request
};

struct SearchHarvest {
  std::vector<VideoRecord> videos;
  std::vector<std::string> warnings;  // skipped malformed items
};

struct CommentHarvest {
  Corpus comments;
  bool comments_disabled = false;
  std::vector<std::string> warnings;
};

// Canonical request string: path plus sorted parameters without the key.
inline std::string request_fingerprint(const std::string& path, QueryParams query) {
  query.erase(std::remove_if(query.begin(), query.end(), [](const auto& kv) { return kv.first == "key"; }),
              query.end());
  std::sort(query.begin(), query.end());
  std::string out = path;
  char sep = '?';
  for (const auto& [k, v] : query) {
    out += sep;
    out += k;
    out += '=';
    out += v;
    sep = '&';
  }
  return out;
}

// `reason` of the first entry of a Google API error body, or empty.
inline std::string api_error_reason(const json& body) {
  if (!body.is_object()) return "";
  auto error = body.find("error");
  if (error == body.end() || !error->is_object()) return "";
  auto errors = error->find("errors");
  if (errors != error->end() && errors->is_array() && !errors->empty() &&
      (*errors)[0].is_object() && (*errors)[0].contains("reason") && (*errors)[0]["reason"].is_string()) {
    return (*errors)[0]["reason"].get<std::string>();
  }
  return "";
}

inline std::string api_error_message(const json& body) {
  if (body.is_object() && body.contains("error") && body["error"].is_object() &&
      body["error"].contains("message") && body["error"]["message"].is_string()) {
    return body["error"]["message"].get<std::string>();
  }
  return "";
}

class YouTubeClient {
 public:
  explicit YouTubeClient(YouTubeOptions options, HttpTransport transport = {})
      : options_(std::move(options)),
        transport_(transport ? std::move(transport) : httplib_transport(options_.base_url)),
        limiter_(options_.requests_per_second) {
    if (options_.api_key.empty()) throw ConfigError("harvest: API key is empty");
    if (options_.comment_page_size < 1 || options_.comment_page_size > 100) {
      throw ConfigError("harvest: comment page size must be within [1, 100]");
    }
  }

  // Top videos for one query, relevance order, with view and comment counts.
  SearchHarvest search(const std::string& query, const HarvestConstraints& constraints) {
    if (query.empty()) throw ConfigError("harvest: query is empty");
    constraints.validate();
    SearchHarvest out;
    json page = get("/search", {{"part", "snippet"},
                                {"q", query},
                                {"type", "video"},
                                {"maxResults", std::to_string(constraints.max_results)},
                                {"order", constraints.order},
                                {"publishedAfter", constraints.published_after},
                                {"publishedBefore", constraints.published_before},
                                {"videoDuration", constraints.duration},
                                {"relevanceLanguage", constraints.language}})
                    .body;
    for (const auto& item : items_of(page, "search")) {
      const json* id = find_path(item, {"id", "videoId"});
      const json* snippet = find_path(item, {"snippet"});
      if (!id || !id->is_string() || !snippet || !snippet->is_object()) {
        out.warnings.push_back("search '" + query + "': skipped malformed item");
        continue;
      }
      VideoRecord v;
      v.id = id->get<std::string>();
      v.channel_id = string_at(*snippet, "channelId");
      v.channel_title = string_at(*snippet, "channelTitle");
      v.title = string_at(*snippet, "title");
      v.published_at = string_at(*snippet, "publishedAt");
      v.query = query;
      out.videos.push_back(std::move(v));
      if (static_cast<int>(out.videos.size()) == constraints.max_results) break;
    }
    if (out.videos.empty()) return out;

    std::string ids;
    for (const auto& v : out.videos) ids += (ids.empty() ? "" : ",") + v.id;
    json stats = get("/videos", {{"part", "statistics"}, {"id", ids}}).body;
    for (const auto& item : items_of(stats, "videos")) {
      const json* id = find_path(item, {"id"});
      if (!id || !id->is_string()) continue;
      for (auto& v : out.videos) {
        if (v.id != id->get<std::string>()) continue;
        v.view_count = count_at(item, "viewCount");
        v.comment_count = count_at(item, "commentCount");
      }
    }
    return out;
  }

  // Every top-level comment of a video. Replies are never emitted.
  CommentHarvest comments(const std::string& video_id, const std::string& group) {
    if (video_id.empty()) throw ConfigError("harvest: video id is empty");
    CommentHarvest out;
    std::string token;
    do {
      QueryParams params = {{"part", "snippet"},
                            {"videoId", video_id},
                            {"maxResults", std::to_string(options_.comment_page_size)},
                            {"textFormat", "plainText"}};
      if (!token.empty()) params.emplace_back("pageToken", token);
      auto page = get("/commentThreads", std::move(params));
      if (page.comments_disabled) {
        out.comments_disabled = true;
        out.warnings.push_back("video " + video_id + ": comments are disabled");
        return out;
      }
      for (const auto& item : items_of(page.body, "commentThreads")) {
        const json* top = find_path(item, {"snippet", "topLevelComment"});
        const json* id = top ? find_path(*top, {"id"}) : nullptr;
        const json* snippet = top ? find_path(*top, {"snippet"}) : nullptr;
        if (!id || !id->is_string() || !snippet || !snippet->is_object()) {
          out.warnings.push_back("video " + video_id + ": skipped malformed comment thread");
          continue;
        }
        if (snippet->contains("parentId")) continue;  // a reply, however it got here
        std::string text = string_at(*snippet, "textOriginal");
        if (text.empty()) text = string_at(*snippet, "textDisplay");
        Document doc = make_document(id->get<std::string>(), DocumentKind::Comment, video_id, group,
                                     std::move(text));
        if (auto channel = string_at(*snippet, "channelId"); !channel.empty()) doc.channel_id = channel;
        if (auto published = string_at(*snippet, "publishedAt"); !published.empty()) {
          doc.published_at = published;
        }
        out.comments.push_back(std::move(doc));
      }
      token = string_at(page.body, "nextPageToken");
    } while (!token.empty());
    return out;
  }

  std::int64_t requests_sent() const noexcept { return requests_sent_; }

 private:
  struct Page {
    json body;
    bool comments_disabled = false;
  };

  Page get(const std::string& endpoint, QueryParams params) {
    const std::string path = options_.api_prefix + endpoint;
    const std::string fingerprint = request_fingerprint(path, params);
    std::filesystem::path cached;
    if (!options_.cache_dir.empty()) {
      cached = options_.cache_dir / (sha256_hex(fingerprint) + ".json");
      if (auto body = read_file(cached)) {
        if (options_.log) options_.log("cache " + fingerprint);
        return {parse_body(*body, fingerprint)};
      }
    }
    params.emplace_back("key", options_.api_key);
    limiter_.acquire();
    if (options_.log) options_.log("GET " + fingerprint);
    ++requests_sent_;
    HttpResponse resp = transport_(HttpRequest{"GET", path, std::move(params)});

    json body = json::parse(resp.body, nullptr, false);
    if (resp.status != 200) {
      const std::string reason = api_error_reason(body);
      if (resp.status == 403 && reason == "commentsDisabled") return {json::object(), true};
      throw_for_status(resp, reason, api_error_message(body), fingerprint);
    }
    if (body.is_discarded() || !body.is_object()) {
      throw UpstreamError("youtube: malformed response for " + fingerprint);
    }
    if (!cached.empty()) write_file_atomic(cached, resp.body);
    return {std::move(body)};
  }

  static json parse_body(const std::string& text, const std::string& fingerprint) {
    json body = json::parse(text, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      throw UpstreamError("youtube: malformed cached response for " + fingerprint);
    }
    return body;
  }

  [[noreturn]] static void throw_for_status(const HttpResponse& resp, const std::string& reason,
                                            const std::string& message, const std::string& what) {
    const std::string detail = "youtube: HTTP " + std::to_string(resp.status) +
                               (reason.empty() ? "" : " " + reason) +
                               (message.empty() ? "" : ": " + message) + " (" + what + ")";
    if (reason == "quotaExceeded" || reason == "dailyLimitExceeded" || reason == "rateLimitExceeded" ||
        reason == "userRateLimitExceeded" || resp.status == 429) {
      int retry = reason == "quotaExceeded" || reason == "dailyLimitExceeded" ? 86400 : 60;
      if (auto header = resp.header("retry-after")) {
        try {
          retry = std::stoi(*header);
        } catch (const std::exception&) {
        }
      }
      throw QuotaError(detail, retry);
    }
    if (resp.status == 401 || reason == "keyInvalid" || reason == "keyExpired" || reason == "forbidden" ||
        reason == "accessNotConfigured" || reason == "authError") {
      throw AuthError(detail);
    }
    if (resp.status == 404 || reason == "videoNotFound") throw NotFoundError(detail);
    throw UpstreamError(detail);
  }

  static const json* find_path(const json& j, std::initializer_list<const char*> keys) {
    const json* cur = &j;
    for (const char* key : keys) {
      if (!cur->is_object()) return nullptr;
      auto it = cur->find(key);
      if (it == cur->end()) return nullptr;
      cur = &*it;
    }
    return cur;
  }

  static std::string string_at(const json& j, const char* key) {
    const json* v = find_path(j, {key});
    return v && v->is_string() ? v->get<std::string>() : std::string();
  }

  // Statistics arrive as decimal strings.
  static std::optional<std::int64_t> count_at(const json& item, const char* key) {
    const json* v = find_path(item, {"statistics", key});
    if (!v) return std::nullopt;
    try {
      if (v->is_string()) return std::stoll(v->get<std::string>());
      if (v->is_number_integer()) return v->get<std::int64_t>();
    } catch (const std::exception&) {
    }
    return std::nullopt;
  }

  static const json& items_of(const json& page, const char* what) {
    static const json empty = json::array();
    auto it = page.find("items");
    if (it == page.end()) return empty;
    if (!it->is_array()) throw UpstreamError(std::string("youtube: ") + what + " items is not an array");
    return *it;
  }

  YouTubeOptions options_;
  HttpTransport transport_;
  RateLimiter limiter_;
  std::atomic<std::int64_t> requests_sent_{0};
};

}  // namespace narrapol
