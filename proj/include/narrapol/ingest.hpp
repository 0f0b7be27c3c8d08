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

// Corpus construction: comment filtering, transcript segmentation and the
// video-level dataset rules.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "narrapol/corpus.hpp"
#include "narrapol/error.hpp"

namespace narrapol {

// ---------------------------------------------------------------------------
// Comment filtering
// ---------------------------------------------------------------------------

// Inclusive word-count bounds.
struct WordBounds {
  std::int64_t min = 25;
  std::int64_t max = 600;
};

struct FilterReport {
  std::size_t kept = 0;
  std::size_t dropped_below = 0;
  std::size_t dropped_above = 0;
};

// Keeps comments with min <= word_count <= max. Transcript segments are not
// comments and pass through untouched.
inline Corpus filter_comments(const Corpus& corpus, WordBounds bounds = {},
                              FilterReport* report = nullptr) {
  if (bounds.min > bounds.max) throw ConfigError("filter: min bound exceeds max bound");
  FilterReport local;
  Corpus out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus) {
    if (doc.kind == DocumentKind::Comment) {
      if (doc.word_count < bounds.min) {
        ++local.dropped_below;
        continue;
      }
      if (doc.word_count > bounds.max) {
        ++local.dropped_above;
        continue;
      }
    }
    ++local.kept;
    out.push_back(doc);
  }
  if (report) *report = local;
  return out;
}

// ---------------------------------------------------------------------------
// Transcript segmentation
// ---------------------------------------------------------------------------

struct SegmentationOptions {
  std::int64_t target_words = 150;
  // A trailing remainder shorter than this is appended to the previous
  // segment.
  std::int64_t merge_threshold = 25;
};

// A segment is an exact byte range of the input text.
struct TextSegment {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::int64_t word_count = 0;
};

namespace detail {

inline constexpr std::array<std::string_view, 16> kAbbreviations = {
    "u.s.", "u.k.", "u.n.", "dr.", "mr.", "mrs.", "ms.", "st.",
    "vs.",  "e.g.", "i.e.", "jr.", "sr.", "prof.", "gen.", "no."};

inline constexpr std::array<std::string_view, 8> kClosers = {
    "\"", "'", ")", "]", "\xE2\x80\x9D" /* ” */, "\xE2\x80\x99" /* ’ */,
    "\xC2\xBB" /* » */, "}"};

// Strips trailing closing quotes/brackets; returns the remaining prefix.
inline std::string_view strip_closers(std::string_view word) {
  bool stripped = true;
  while (stripped && !word.empty()) {
    stripped = false;
    for (auto closer : kClosers) {
      if (word.size() >= closer.size() && word.substr(word.size() - closer.size()) == closer) {
        word.remove_suffix(closer.size());
        stripped = true;
        break;
      }
    }
  }
  return word;
}

inline std::string_view strip_openers(std::string_view word) {
  while (!word.empty() && (word.front() == '"' || word.front() == '\'' || word.front() == '(' ||
                           word.front() == '[')) {
    word.remove_prefix(1);
  }
  return word;
}

}  // namespace detail

// True when `word` (a whitespace token) ends a sentence: terminal . ! or ?,
// optionally followed by closing quotes/brackets, and not a known
// abbreviation.
inline bool ends_sentence(std::string_view word) {
  std::string_view core = detail::strip_closers(word);
  if (core.empty()) return false;
  char last = core.back();
  if (last != '.' && last != '!' && last != '?') return false;
  if (last == '.') {
    std::string lower;
    for (char c : detail::strip_openers(core)) {
      lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    for (auto abbr : detail::kAbbreviations) {
      if (lower == abbr) return false;
    }
  }
  return true;
}

// Splits at the first sentence boundary at or after `target_words` words.
// Every non-final segment ends in terminal punctuation; segments never
// overlap and cover every word of the input in order.
inline std::vector<TextSegment> segment_text(std::string_view text,
                                             SegmentationOptions options = {}) {
  if (options.target_words < 1) throw ConfigError("segment: target_words must be >= 1");
  if (options.merge_threshold < 0) throw ConfigError("segment: merge_threshold must be >= 0");
  std::vector<TextSegment> segments;
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };

  std::size_t pos = 0;
  std::optional<std::size_t> start;
  std::int64_t words = 0;
  while (pos < text.size()) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    if (pos >= text.size()) break;
    std::size_t word_begin = pos;
    while (pos < text.size() && !is_space(text[pos])) ++pos;
    if (!start) start = word_begin;
    ++words;
    if (words >= options.target_words && ends_sentence(text.substr(word_begin, pos - word_begin))) {
      segments.push_back({*start, pos, words});
      start.reset();
      words = 0;
    }
  }
  if (start) {
    std::size_t end = text.size();
    while (end > *start && is_space(text[end - 1])) --end;
    if (!segments.empty() && words < options.merge_threshold) {
      segments.back().end = end;
      segments.back().word_count += words;
    } else {
      segments.push_back({*start, end, words});
    }
  }
  return segments;
}

inline std::vector<std::string> segment_transcript(std::string_view text,
                                                   SegmentationOptions options = {}) {
  if (text.empty()) throw DataContractError("segment: transcript text is empty");
  std::vector<std::string> out;
  for (const auto& seg : segment_text(text, options)) {
    out.emplace_back(text.substr(seg.begin, seg.end - seg.begin));
  }
  return out;
}

// Re-segments whole-transcript documents into transcript segments with ids
// "<id>#<k>" (k from 1). Other fields are inherited.
inline Corpus segment_corpus(const Corpus& transcripts, SegmentationOptions options = {}) {
  Corpus out;
  for (const auto& doc : transcripts) {
    if (doc.text.empty()) continue;
    int k = 0;
    for (auto& text : segment_transcript(doc.text, options)) {
      Document seg = doc;
      seg.id = doc.id + "#" + std::to_string(++k);
      seg.kind = DocumentKind::TranscriptSegment;
      seg.text = std::move(text);
      seg.word_count = count_words(seg.text);
      seg.frame.reset();
      seg.provenance.reset();
      seg.annotation_error.reset();
      out.push_back(std::move(seg));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Harvest constraints and dataset rules
// ---------------------------------------------------------------------------

// RFC 3339 UTC timestamp with a trailing Z, e.g. 2023-10-07T00:00:00Z.
inline bool is_utc_timestamp(std::string_view ts) {
  static const std::regex pattern(R"(^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?Z$)");
  return std::regex_match(ts.begin(), ts.end(), pattern);
}

struct HarvestConstraints {
  std::string published_after = "2023-10-07T00:00:00Z";
  std::string published_before = "2024-10-01T00:00:00Z";
  std::string duration = "medium";  // 4-20 minutes
  std::string language = "en";
  int max_results = 20;
  std::string order = "relevance";

  void validate() const {
    if (!is_utc_timestamp(published_after) || !is_utc_timestamp(published_before)) {
      throw ConfigError("harvest: timestamps must look like 2023-10-07T00:00:00Z");
    }
    // Same fixed-width format, so lexical order is chronological.
    if (!(published_after < published_before)) {
      throw ConfigError("harvest: published_after must precede published_before");
    }
    if (max_results < 1 || max_results > 50) {
      throw ConfigError("harvest: max_results must be within [1, 50]");
    }
  }
};

struct DatasetRules {
  std::int64_t min_comments_per_video = 20;
  WordBounds comment_word_bounds{};
  bool drop_within_group_duplicates = true;
  bool drop_cross_partisan_duplicates = true;
  bool drop_neutral_partisan_overlap = true;
  bool top_level_comments_only = true;

  std::string neutral_group = "neutral";
  std::array<std::string, 2> partisan_groups = {"israeli-leaning", "palestinian-leaning"};

  void validate() const {
    if (comment_word_bounds.min > comment_word_bounds.max) {
      throw ConfigError("dataset rules: comment word bounds are inverted");
    }
    if (min_comments_per_video < 0) throw ConfigError("dataset rules: negative min_comments");
  }
};

// One search hit: the video and the query that retrieved it.
struct VideoRecord {
  std::string id;
  std::string channel_id;
  std::string channel_title;
  std::string title;
  std::string published_at;
  std::optional<std::int64_t> view_count;
  std::optional<std::int64_t> comment_count;
  std::string query;

  friend bool operator==(const VideoRecord&, const VideoRecord&) = default;
};

struct DropRecord {
  std::string video_id;
  std::string group;
  std::string reason;  // within_group_duplicate | min_comments |
                       // cross_partisan_duplicate | neutral_partisan_overlap

  friend bool operator==(const DropRecord&, const DropRecord&) = default;
};

struct DatasetSelection {
  std::map<std::string, std::vector<VideoRecord>> groups;
  std::vector<DropRecord> drops;
};

// Applies the selection rules to per-group search hits. A video retrieved
// by several queries of one group is kept once. Videos below the comment
// floor, videos in both partisan groups, and videos shared by the neutral
// group and any partisan group are removed everywhere; every removal is
// reported.
inline DatasetSelection apply_dataset_rules(
    const std::map<std::string, std::vector<VideoRecord>>& hits, const DatasetRules& rules) {
  rules.validate();
  DatasetSelection out;

  for (const auto& [group, videos] : hits) {
    auto& kept = out.groups[group];
    std::set<std::string> seen;
    for (const auto& video : videos) {
      if (!seen.insert(video.id).second) {
        if (rules.drop_within_group_duplicates) {
          out.drops.push_back({video.id, group, "within_group_duplicate"});
          continue;
        }
      }
      kept.push_back(video);
    }
  }

  auto remove_where = [&out](const std::string& reason, auto&& predicate) {
    for (auto& [group, videos] : out.groups) {
      std::vector<VideoRecord> kept;
      for (auto& video : videos) {
        if (predicate(group, video)) {
          out.drops.push_back({video.id, group, reason});
        } else {
          kept.push_back(std::move(video));
        }
      }
      videos = std::move(kept);
    }
  };

  remove_where("min_comments", [&](const std::string&, const VideoRecord& v) {
    return v.comment_count && *v.comment_count < rules.min_comments_per_video;
  });

  auto ids_of = [&out](const std::string& group) {
    std::set<std::string> ids;
    if (auto it = out.groups.find(group); it != out.groups.end()) {
      for (const auto& v : it->second) ids.insert(v.id);
    }
    return ids;
  };

  const auto first = ids_of(rules.partisan_groups[0]);
  const auto second = ids_of(rules.partisan_groups[1]);
  const auto neutral = ids_of(rules.neutral_group);

  if (rules.drop_cross_partisan_duplicates) {
    remove_where("cross_partisan_duplicate", [&](const std::string& group, const VideoRecord& v) {
      if (group != rules.partisan_groups[0] && group != rules.partisan_groups[1]) return false;
      return first.count(v.id) && second.count(v.id);
    });
  }
  if (rules.drop_neutral_partisan_overlap) {
    remove_where("neutral_partisan_overlap", [&](const std::string&, const VideoRecord& v) {
      return neutral.count(v.id) && (first.count(v.id) || second.count(v.id));
    });
  }
  return out;
}

inline nlohmann::json video_to_json(const VideoRecord& v) {
  nlohmann::json j = {{"id", v.id},
                      {"channel_id", v.channel_id},
                      {"channel_title", v.channel_title},
                      {"title", v.title},
                      {"published_at", v.published_at},
                      {"query", v.query}};
  j["view_count"] = v.view_count ? nlohmann::json(*v.view_count) : nlohmann::json(nullptr);
  j["comment_count"] =
      v.comment_count ? nlohmann::json(*v.comment_count) : nlohmann::json(nullptr);
  return j;
}

inline VideoRecord video_from_json(const nlohmann::json& j) {
  VideoRecord v;
  v.id = j.at("id").get<std::string>();
  v.channel_id = j.value("channel_id", "");
  v.channel_title = j.value("channel_title", "");
  v.title = j.value("title", "");
  v.published_at = j.value("published_at", "");
  v.query = j.value("query", "");
  if (j.contains("view_count") && !j["view_count"].is_null()) v.view_count = j["view_count"].get<std::int64_t>();
  if (j.contains("comment_count") && !j["comment_count"].is_null()) {
    v.comment_count = j["comment_count"].get<std::int64_t>();
  }
  return v;
}

}  // namespace narrapol
