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

// Documents and the line-oriented corpus file format. One JSON object per
// line; unknown fields survive a read/write cycle untouched.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "narrapol/error.hpp"
#include "narrapol/model.hpp"

namespace narrapol {

inline constexpr int kCorpusSchemaVersion = 1;

enum class DocumentKind { Comment, TranscriptSegment };

constexpr std::string_view kind_name(DocumentKind kind) noexcept {
  return kind == DocumentKind::Comment ? "comment" : "transcript_segment";
}

inline std::optional<DocumentKind> parse_kind(std::string_view name) {
  if (name == "comment") return DocumentKind::Comment;
  if (name == "transcript_segment") return DocumentKind::TranscriptSegment;
  return std::nullopt;
}

// Whitespace-separated token count.
inline std::int64_t count_words(std::string_view text) {
  std::int64_t words = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

struct Provenance {
  std::string model;
  std::string prompt_hash;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

// A comment or transcript segment. `frame` and `provenance` are filled by the
// annotation stage; `annotation_error` marks documents whose annotation
// failed after retries.
struct Document {
  std::string id;
  DocumentKind kind = DocumentKind::Comment;
  std::string video_id;
  std::optional<std::string> channel_id;
  std::string group;
  std::string text;
  std::int64_t word_count = 0;
  std::optional<std::int64_t> view_count;
  std::optional<std::string> published_at;

  std::optional<ActantFrame> frame;
  std::optional<Provenance> provenance;
  std::optional<std::string> annotation_error;

  // Fields this library does not know about, in their original order.
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  bool annotated() const noexcept { return frame.has_value(); }

  friend bool operator==(const Document&, const Document&) = default;
};

using Corpus = std::vector<Document>;

inline Document make_document(std::string id, DocumentKind kind, std::string video_id,
                              std::string group, std::string text) {
  Document doc;
  doc.id = std::move(id);
  doc.kind = kind;
  doc.video_id = std::move(video_id);
  doc.group = std::move(group);
  doc.text = std::move(text);
  doc.word_count = count_words(doc.text);
  return doc;
}

namespace detail {

inline const char* const kKnownDocumentFields[] = {
    "schema_version", "id",         "kind",         "video_id",   "channel_id",
    "group",          "text",       "word_count",   "view_count", "published_at",
    "frame",          "provenance", "annotation_error"};

inline bool is_known_field(std::string_view key) {
  for (const char* known : kKnownDocumentFields) {
    if (key == known) return true;
  }
  return false;
}

template <typename Json>
std::string required_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataContractError(std::string("missing required field '") + key + "'");
  if (!it->is_string()) throw DataContractError(std::string("field '") + key + "' must be a string");
  return it->template get<std::string>();
}

template <typename Json>
std::optional<std::string> optional_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw DataContractError(std::string("field '") + key + "' must be a string");
  return it->template get<std::string>();
}

template <typename Json>
std::optional<std::int64_t> optional_integer(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) {
    throw DataContractError(std::string("field '") + key + "' must be an integer");
  }
  return it->template get<std::int64_t>();
}

}  // namespace detail

inline Document document_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw DataContractError("document must be a JSON object");
  if (auto version = detail::optional_integer(j, "schema_version");
      version && *version != kCorpusSchemaVersion) {
    throw DataContractError("schema_version " + std::to_string(*version) +
                            " is not supported (expected " +
                            std::to_string(kCorpusSchemaVersion) + ")");
  }
  Document doc;
  doc.id = detail::required_string(j, "id");
  if (doc.id.empty()) throw DataContractError("field 'id' must be non-empty");
  auto kind = parse_kind(detail::required_string(j, "kind"));
  if (!kind) throw DataContractError("field 'kind' must be comment or transcript_segment");
  doc.kind = *kind;
  doc.video_id = detail::required_string(j, "video_id");
  doc.channel_id = detail::optional_string(j, "channel_id");
  doc.group = detail::required_string(j, "group");
  doc.text = detail::required_string(j, "text");
  auto words = detail::optional_integer(j, "word_count");
  doc.word_count = count_words(doc.text);
  if (words && *words != doc.word_count) {
    throw DataContractError("word_count " + std::to_string(*words) + " does not match text (" +
                            std::to_string(doc.word_count) + " whitespace tokens)");
  }
  doc.view_count = detail::optional_integer(j, "view_count");
  doc.published_at = detail::optional_string(j, "published_at");
  if (auto it = j.find("frame"); it != j.end() && !it->is_null()) {
    doc.frame = frame_from_json(json::parse(it->dump()));
  }
  if (auto it = j.find("provenance"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw DataContractError("field 'provenance' must be an object");
    doc.provenance = Provenance{detail::required_string(*it, "model"),
                                detail::required_string(*it, "prompt_hash")};
  }
  doc.annotation_error = detail::optional_string(j, "annotation_error");
  for (const auto& [key, value] : j.items()) {
    if (!detail::is_known_field(key)) doc.extra[key] = value;
  }
  return doc;
}

inline nlohmann::ordered_json document_to_json(const Document& doc) {
  nlohmann::ordered_json j;
  j["id"] = doc.id;
  j["kind"] = std::string(kind_name(doc.kind));
  j["video_id"] = doc.video_id;
  if (doc.channel_id) j["channel_id"] = *doc.channel_id;
  j["group"] = doc.group;
  j["text"] = doc.text;
  j["word_count"] = doc.word_count;
  if (doc.view_count) j["view_count"] = *doc.view_count;
  if (doc.published_at) j["published_at"] = *doc.published_at;
  if (doc.frame) {
    nlohmann::ordered_json frame;
    for (ActantRole role : kAllRoles) {
      const auto& value = doc.frame->slot(role);
      frame[std::string(role_name(role))] =
          value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
    }
    j["frame"] = std::move(frame);
  }
  if (doc.provenance) {
    j["provenance"] = {{"model", doc.provenance->model},
                       {"prompt_hash", doc.provenance->prompt_hash}};
  }
  if (doc.annotation_error) j["annotation_error"] = *doc.annotation_error;
  for (const auto& [key, value] : doc.extra.items()) j[key] = value;
  return j;
}

// Parse a JSONL stream. Blank lines are skipped; any other malformed line
// fails with its 1-based line number.
inline Corpus parse_corpus(std::istream& in, std::string_view source = "<stream>") {
  Corpus corpus;
  std::string line;
  std::size_t line_number = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::ordered_json::parse(line);
      Document doc = document_from_json(j);
      if (!ids.insert(doc.id).second) {
        throw DataContractError("duplicate document id '" + doc.id + "'");
      }
      corpus.push_back(std::move(doc));
    } catch (const nlohmann::json::exception& e) {
      throw DataContractError(std::string(source) + ":" + std::to_string(line_number) +
                              ": malformed JSON: " + e.what());
    } catch (const DataContractError& e) {
      throw DataContractError(std::string(source) + ":" + std::to_string(line_number) + ": " +
                              e.what());
    }
  }
  return corpus;
}

inline void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus) out << document_to_json(doc).dump() << '\n';
}

inline Corpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataContractError("cannot open corpus file " + path.string());
  return parse_corpus(in, path.string());
}

inline void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataContractError("cannot write corpus file " + path.string());
  write_corpus(corpus, out);
  if (!out) throw DataContractError("write failed for " + path.string());
}

}  // namespace narrapol
