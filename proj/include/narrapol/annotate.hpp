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

// Frame annotation through an OpenAI-compatible chat-completion endpoint:
// prompt rendering, response parsing, label normalisation and a resumable,
// cached batch driver.

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <chrono>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "narrapol/corpus.hpp"
#include "narrapol/error.hpp"
#include "narrapol/hash.hpp"
#include "narrapol/http.hpp"
#include "narrapol/metrics.hpp"
#include "narrapol/model.hpp"

namespace narrapol {

inline constexpr std::string_view kDefaultPromptTemplate = R"tmpl(You label the narrative structure of short texts about the Israeli-Palestinian conflict using the actantial model. Assign at most one label to each of six roles:

- subject: the actor who desires or pursues the object.
- object: what the subject desires or pursues.
- sender: the actor who controls the object and can grant or withhold it.
- receiver: the actor who receives the object or is its intended beneficiary.
- helper: the actor who supports the subject.
- opponent: the actor who works against the subject.

Actor labels (subject, sender, receiver, helper, opponent): {{actors}}
Object labels (object): {{objects}}

Use only the labels above. If the text names an actor outside the list, write "unknown". If a role is not expressed in the text, use null.

Answer with a single JSON object and nothing after it, with exactly these keys:
{"subject": ..., "object": ..., "sender": ..., "receiver": ..., "helper": ..., "opponent": ...}

Text:
{{document}}
)tmpl";

// The response could not be turned into a frame.
class ResponseParseError : public DataContractError {
 public:
  using DataContractError::DataContractError;
};

struct PromptTemplate {
  std::string text{kDefaultPromptTemplate};

  static PromptTemplate load(const std::filesystem::path& path) {
    auto text = read_file(path);
    if (!text) throw ConfigError("cannot read prompt template " + path.string());
    return PromptTemplate{*text};
  }
};

namespace detail {

inline constexpr std::string_view kActorsSlot = "{{actors}}";
inline constexpr std::string_view kObjectsSlot = "{{objects}}";
inline constexpr std::string_view kDocumentSlot = "{{document}}";

inline std::string quoted_list(const std::vector<std::string>& labels) {
  std::string out;
  for (const auto& label : labels) {
    if (!out.empty()) out += ", ";
    out += '"' + label + '"';
  }
  return out;
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Single left-to-right pass, so placeholder text inside a document is never
// expanded.
inline std::string render(std::string_view tmpl, std::string_view actors, std::string_view objects,
                          std::string_view document) {
  std::string out;
  out.reserve(tmpl.size() + actors.size() + objects.size() + document.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    auto rest = tmpl.substr(i);
    if (rest.starts_with(kActorsSlot)) {
      out += actors;
      i += kActorsSlot.size();
    } else if (rest.starts_with(kObjectsSlot)) {
      out += objects;
      i += kObjectsSlot.size();
    } else if (rest.starts_with(kDocumentSlot)) {
      out += document;
      i += kDocumentSlot.size();
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

}  // namespace detail

// Template with the label catalog filled in and the document slot left open.
inline std::string render_catalog(const Taxonomy& taxonomy, const PromptTemplate& tmpl) {
  for (auto slot : {detail::kActorsSlot, detail::kObjectsSlot, detail::kDocumentSlot}) {
    if (tmpl.text.find(slot) == std::string::npos) {
      throw ConfigError("prompt template lacks the " + std::string(slot) + " placeholder");
    }
  }
  if (taxonomy.actors().empty() || taxonomy.objects().empty()) {
    throw ConfigError("prompt: taxonomy is empty");
  }
  std::string catalog = detail::render(tmpl.text, detail::quoted_list(taxonomy.actors()),
                                       detail::quoted_list(taxonomy.objects()),
                                       detail::kDocumentSlot);
  const std::string folded = detail::lowercase(catalog);
  for (ActantRole role : kAllRoles) {
    if (folded.find(role_name(role)) == std::string::npos) {
      throw ConfigError("prompt template never names the " + std::string(role_name(role)) + " role");
    }
  }
  return catalog;
}

// Hash recorded in provenance: identifies template plus label catalog.
inline std::string prompt_hash(const Taxonomy& taxonomy, const PromptTemplate& tmpl) {
  return sha256_hex(render_catalog(taxonomy, tmpl));
}

inline std::string build_prompt(const Document& doc, const Taxonomy& taxonomy, const PromptTemplate& tmpl) {
  render_catalog(taxonomy, tmpl);
  return detail::render(tmpl.text, detail::quoted_list(taxonomy.actors()),
                        detail::quoted_list(taxonomy.objects()), doc.text);
}

// ---------------------------------------------------------------------------
// Responses
// ---------------------------------------------------------------------------

struct RawAnnotation {
  std::array<std::optional<std::string>, 6> roles;  // indexed like kAllRoles
  std::string model;
  std::string response_sha256;

  const std::optional<std::string>& of(ActantRole role) const {
    return roles[static_cast<std::size_t>(role)];
  }
};

namespace detail {

// End of the balanced {...} starting at `begin`, honouring JSON strings.
inline std::optional<std::size_t> object_end(std::string_view text, std::size_t begin) {
  int depth = 0;
  bool in_string = false, escaped = false;
  for (std::size_t i = begin; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      return i;
    }
  }
  return std::nullopt;
}

inline bool absent_value(std::string_view v) {
  const std::string folded = fold_label(v);
  return folded.empty() || folded == "null" || folded == "none" || folded == "n/a";
}

}  // namespace detail

// Extracts the role object from a model reply. Reasoning before the object
// (including a closed think block) is ignored; when several objects parse,
// the last one wins.
inline RawAnnotation parse_response(std::string_view reply, std::string model = {}) {
  RawAnnotation out;
  out.model = std::move(model);
  out.response_sha256 = sha256_hex(reply);

  std::string_view text = reply;
  if (auto think = text.rfind("</think>"); think != std::string_view::npos) text = text.substr(think + 8);

  std::optional<std::string_view> chosen;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    auto end = detail::object_end(text, i);
    if (!end) break;
    auto candidate = text.substr(i, *end - i + 1);
    if (json::accept(candidate)) chosen = candidate;
    i = *end;
  }
  if (!chosen) throw ResponseParseError("response contains no JSON object");

  std::vector<std::string> keys;
  json::parser_callback_t collect = [&](int depth, json::parse_event_t event, json& parsed) {
    if (depth == 1 && event == json::parse_event_t::key) keys.push_back(detail::lowercase(parsed.get<std::string>()));
    return true;
  };
  const json object = json::parse(*chosen, collect);
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
    throw ResponseParseError("response repeats a role key");
  }
  for (const auto& [key, value] : object.items()) {
    auto role = parse_role(detail::lowercase(key));
    if (!role) throw ResponseParseError("response has unexpected key '" + key + "'");
    if (value.is_null()) continue;
    if (!value.is_string()) {
      throw ResponseParseError("response value for '" + key + "' is not a string");
    }
    const auto& s = value.get_ref<const std::string&>();
    if (!detail::absent_value(s)) out.roles[static_cast<std::size_t>(*role)] = s;
  }
  return out;
}

struct NormalizedFrame {
  ActantFrame frame;
  std::vector<LabelMiss> misses;
};

// Canonicalises every slot. Unmatched actors become "unknown"; unmatched
// objects become null. Both are logged with the raw string.
inline NormalizedFrame normalize_frame(const RawAnnotation& raw, const Taxonomy& taxonomy) {
  NormalizedFrame out;
  for (ActantRole role : kAllRoles) {
    const auto& value = raw.of(role);
    if (!value) continue;
    const std::string name(role_name(role));
    auto label = taxonomy.canonicalize(*value);
    auto miss = [&] { out.misses.push_back({*value, fold_label(*value), name}); };
    if (role == ActantRole::Object) {
      if (label.kind == LabelKind::Object) {
        out.frame.object = label.token;
      } else if (fold_label(*value) != kUnknownActor) {
        miss();
      }
      continue;
    }
    if (label.kind == LabelKind::Actor) {
      out.frame.slot(role) = label.token;
    } else {
      out.frame.slot(role) = std::string(kUnknownActor);
      if (label.miss || label.kind == LabelKind::Object) miss();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batch driver
// ---------------------------------------------------------------------------

inline constexpr const char* kAnnotateKeyVariable = "NARRAPOL_LLM_API_KEY";

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key;  // sent as a bearer token when set
  double temperature = 0.0;
  std::optional<int> max_tokens;
  int timeout_seconds = 600;
  int max_retries = 3;
  int backoff_ms = 1000;  // doubled on every retry
  int concurrency = 4;

  void validate() const {
    if (model.empty()) throw ConfigError("annotate: model id is empty");
    if (base_url.empty()) throw ConfigError("annotate: endpoint URL is empty");
    if (max_retries < 0 || backoff_ms < 0) throw ConfigError("annotate: retries and backoff must be >= 0");
    if (concurrency < 1) throw ConfigError("annotate: concurrency must be >= 1");
    if (temperature < 0.0) throw ConfigError("annotate: temperature must be >= 0");
  }
};

// Key of one cached response: document, exact prompt bytes and model.
inline std::string annotation_cache_key(std::string_view doc_id, std::string_view prompt,
                                        std::string_view model) {
  std::string material(doc_id);
  material += '\n';
  material += sha256_hex(prompt);
  material += '\n';
  material += model;
  return sha256_hex(material);
}

struct AnnotationMiss {
  std::string id;
  LabelMiss miss;
};

struct AnnotationReport {
  std::int64_t n_documents = 0;
  std::int64_t n_cached = 0;
  std::int64_t n_requested = 0;  // documents that needed the endpoint
  std::int64_t n_requests = 0;   // HTTP calls, retries included
  std::int64_t n_failed = 0;
  std::vector<std::pair<std::string, std::string>> failures;
  std::vector<AnnotationMiss> misses;
  MissingShares missingness;
  std::string model;
  std::string prompt_hash;

  json to_json() const {
    json shares = json::object();
    for (ActantRole role : kAllRoles) shares[std::string(role_name(role))] = missingness.of(role);
    json fail = json::array();
    for (const auto& [id, why] : failures) fail.push_back({{"id", id}, {"error", why}});
    json miss = json::array();
    for (const auto& m : misses) {
      miss.push_back({{"id", m.id}, {"role", m.miss.role}, {"raw", m.miss.raw}});
    }
    return {{"model", model},
            {"prompt_hash", prompt_hash},
            {"n_documents", n_documents},
            {"n_cached", n_cached},
            {"n_requested", n_requested},
            {"n_requests", n_requests},
            {"n_failed", n_failed},
            {"missing_share", shares},
            {"n_annotated", missingness.n},
            {"failures", fail},
            {"label_misses", miss}};
  }
};

struct AnnotationRun {
  Corpus corpus;  // sorted by id
  AnnotationReport report;
};

inline json chat_request_body(const EndpointConfig& endpoint, const std::string& prompt) {
  json body = {{"model", endpoint.model},
               {"temperature", endpoint.temperature},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
  if (endpoint.max_tokens) body["max_tokens"] = *endpoint.max_tokens;
  return body;
}

// choices[0].message.content of a chat-completion response.
inline std::string chat_reply_text(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("choices") || !j["choices"].is_array() ||
      j["choices"].empty()) {
    throw ResponseParseError("endpoint reply is not a chat completion");
  }
  const json& choice = j["choices"][0];
  if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object() ||
      !choice["message"].contains("content") || !choice["message"]["content"].is_string()) {
    throw ResponseParseError("chat completion has no message content");
  }
  return choice["message"]["content"].get<std::string>();
}

// Annotates every document, reusing cached replies. Documents that still
// fail after the retry budget keep no frame and carry `annotation_error`;
// authentication failures abort the run.
inline AnnotationRun annotate_corpus(const Corpus& input, const Taxonomy& taxonomy,
                                     const PromptTemplate& tmpl, const EndpointConfig& endpoint,
                                     const std::filesystem::path& cache_dir, HttpTransport transport = {}) {
  endpoint.validate();
  if (cache_dir.empty()) throw ConfigError("annotate: cache directory is required");
  std::filesystem::create_directories(cache_dir);
  if (!transport) transport = httplib_transport(endpoint.base_url, endpoint.timeout_seconds);

  AnnotationRun run;
  run.corpus = input;
  std::sort(run.corpus.begin(), run.corpus.end(),
            [](const Document& a, const Document& b) { return a.id < b.id; });
  run.report.n_documents = static_cast<std::int64_t>(run.corpus.size());
  run.report.model = endpoint.model;
  run.report.prompt_hash = prompt_hash(taxonomy, tmpl);

  struct Outcome {
    bool cached = false;
    bool requested = false;
    int requests = 0;
    std::optional<NormalizedFrame> frame;
    std::string error;
  };
  std::vector<Outcome> outcomes(run.corpus.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto handle = [&](std::size_t index) {
    const Document& doc = run.corpus[index];
    Outcome& out = outcomes[index];
    const std::string prompt = build_prompt(doc, taxonomy, tmpl);
    const auto path = cache_dir / (annotation_cache_key(doc.id, prompt, endpoint.model) + ".json");

    if (auto stored = read_file(path)) {
      json entry = json::parse(*stored, nullptr, false);
      if (entry.is_object() && entry.contains("response") && entry["response"].is_string()) {
        try {
          out.frame = normalize_frame(parse_response(entry["response"].get<std::string>(), endpoint.model),
                                      taxonomy);
          out.cached = true;
          return;
        } catch (const ResponseParseError&) {
          // A stale entry; fall through and ask again.
        }
      }
    }

    out.requested = true;
    HttpRequest req;
    req.method = "POST";
    req.path = endpoint.path;
    req.body = chat_request_body(endpoint, prompt).dump();
    if (!endpoint.api_key.empty()) req.headers.emplace_back("Authorization", "Bearer " + endpoint.api_key);

    for (int attempt = 0; attempt <= endpoint.max_retries && !abort; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(endpoint.backoff_ms) * (1 << (attempt - 1)));
      }
      ++out.requests;
      try {
        HttpResponse resp = transport(req);
        if (resp.status == 401 || resp.status == 403) {
          throw AuthError("annotate: endpoint rejected credentials (HTTP " + std::to_string(resp.status) + ")");
        }
        if (resp.status != 200) {
          out.error = "HTTP " + std::to_string(resp.status);
          continue;
        }
        const std::string reply = chat_reply_text(resp.body);
        out.frame = normalize_frame(parse_response(reply, endpoint.model), taxonomy);
        json entry = {{"id", doc.id}, {"model", endpoint.model}, {"prompt_sha256", sha256_hex(prompt)},
                      {"response", reply}};
        write_file_atomic(path, entry.dump(2) + "\n");
        out.error.clear();
        return;
      } catch (const AuthError&) {
        throw;
      } catch (const ResponseParseError& e) {
        out.error = e.what();
      } catch (const UpstreamError& e) {
        out.error = e.what();
      }
    }
  };

  auto worker = [&] {
    for (;;) {
      const std::size_t index = next.fetch_add(1);
      if (index >= run.corpus.size() || abort) return;
      try {
        handle(index);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        abort = true;
        return;
      }
    }
  };

  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(endpoint.concurrency), std::max<std::size_t>(run.corpus.size(), 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  std::vector<const ActantFrame*> annotated;
  for (std::size_t i = 0; i < run.corpus.size(); ++i) {
    Document& doc = run.corpus[i];
    Outcome& out = outcomes[i];
    run.report.n_cached += out.cached;
    run.report.n_requested += out.requested;
    run.report.n_requests += out.requests;
    if (out.frame) {
      doc.frame = out.frame->frame;
      doc.provenance = Provenance{endpoint.model, run.report.prompt_hash};
      doc.annotation_error.reset();
      for (auto& m : out.frame->misses) run.report.misses.push_back({doc.id, std::move(m)});
      annotated.push_back(&*doc.frame);
    } else {
      doc.frame.reset();
      doc.provenance = Provenance{endpoint.model, run.report.prompt_hash};
      doc.annotation_error = out.error.empty() ? "annotation failed" : out.error;
      ++run.report.n_failed;
      run.report.failures.emplace_back(doc.id, *doc.annotation_error);
    }
  }
  run.report.missingness = missing_actant_shares(annotated);
  return run;
}

}  // namespace narrapol
