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

// Run configuration: one JSON file describes every stage of a run. Unknown
// keys are rejected so typos surface before any stage executes.

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "narrapol/annotate.hpp"
#include "narrapol/error.hpp"
#include "narrapol/hash.hpp"
#include "narrapol/ingest.hpp"
#include "narrapol/metrics.hpp"
#include "narrapol/model.hpp"
#include "narrapol/resample.hpp"

#ifndef NARRAPOL_VERSION
#define NARRAPOL_VERSION "0.1.0"
#endif

namespace narrapol {

inline constexpr std::string_view kToolVersion = NARRAPOL_VERSION;

enum class PermutationMode {
  PerObject,  // shuffle within each object's slice
  Joint,      // shuffle whole documents, recompute every object
};

struct GroupQueries {
  std::string id;
  std::vector<std::string> queries;
};

struct AnalysisOptions {
  std::int64_t min_count = 60;
  DivergenceMode divergence_mode = DivergenceMode::Reduced;
  PermutationMode permutation = PermutationMode::PerObject;
  MotifDenominator motif_denominator = MotifDenominator::AllFrames;
  MotifMatching motif_matching = MotifMatching::SideLevel;
  double motif_prevalence_floor = 0.05;
  std::int64_t role_support_floor = 30;
  bool exclude_meta = true;
};

struct RunConfig {
  std::vector<GroupQueries> groups;
  HarvestConstraints harvest;
  double harvest_requests_per_second = 5.0;
  std::string harvest_cache_dir = "cache/harvest";
  DatasetRules rules;
  SegmentationOptions segmentation;
  EndpointConfig annotation;
  std::string annotation_cache_dir = "cache/annotations";
  std::string prompt_template;  // path; empty means the built-in template
  ResamplingConfig resampling;
  AnalysisOptions analysis;
  std::string taxonomy;  // path; empty means the built-in taxonomy
  std::string output_dir = "out";

  // Query sets of the published study.
  static RunConfig defaults();
  static RunConfig from_json(const json& j);
  static RunConfig load(const std::filesystem::path& path);
  json to_json() const;
  void validate() const;

  // SHA-256 of the canonical JSON without the output location and thread
  // count, neither of which changes results.
  std::string hash() const;

  Taxonomy load_taxonomy() const;
  PromptTemplate load_prompt_template() const;
};

// ---------------------------------------------------------------------------
// Enum spellings
// ---------------------------------------------------------------------------

inline std::string_view mode_name(DivergenceMode m) { return m == DivergenceMode::Reduced ? "reduced" : "full"; }
inline std::string_view permutation_name(PermutationMode m) {
  return m == PermutationMode::PerObject ? "per_object" : "joint";
}
inline std::string_view denominator_name(MotifDenominator d) {
  return d == MotifDenominator::AllFrames ? "all_frames" : "complete_frames";
}
inline std::string_view matching_name(MotifMatching m) {
  return m == MotifMatching::SideLevel ? "side" : "actor";
}
inline std::string_view unit_name(ResampleUnit u) { return u == ResampleUnit::Document ? "document" : "video"; }

namespace detail {

template <typename E, std::size_t N>
E parse_enum(const std::string& text, const std::array<std::pair<std::string_view, E>, N>& table,
             const std::string& what) {
  for (const auto& [name, value] : table) {
    if (name == text) return value;
  }
  throw ConfigError("config: bad " + what + " '" + text + "'");
}

// Reads known keys out of one JSON object and rejects the rest.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError("config: " + where_ + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: bad value for " + where_ + "." + key);
    }
  }

  template <typename T>
  void read_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    T value{};
    read(key, value);
    out = value;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("config: unknown key " + where_ + "." + key);
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline RunConfig RunConfig::defaults() {
  RunConfig c;
  c.groups = {
      {"neutral", {"israel palestine explained", "israel hamas explained", "israel gaza explained"}},
      {"israeli-leaning",
       {"attack on israel news", "israel october 7", "hamas terror", "hamas rape", "israel hostages",
        "israel antisemitism"}},
      {"palestinian-leaning",
       {"attack on gaza news", "gaza rafah news", "gaza ceasefire", "gaza genocide", "israel war crimes",
        "israel zionism"}}};
  c.annotation.model = "deepseek-r1-distill-qwen-32b";
  return c;
}

inline void RunConfig::validate() const {
  std::set<std::string> ids;
  for (const auto& g : groups) {
    if (g.id.empty()) throw ConfigError("config: group id is empty");
    if (!ids.insert(g.id).second) throw ConfigError("config: duplicate group '" + g.id + "'");
    for (const auto& q : g.queries) {
      if (q.empty()) throw ConfigError("config: empty query in group '" + g.id + "'");
    }
  }
  harvest.validate();
  if (harvest_requests_per_second < 0) throw ConfigError("config: negative request rate");
  rules.validate();
  if (rules.partisan_groups[0] == rules.partisan_groups[1]) {
    throw ConfigError("config: the two partisan groups must differ");
  }
  if (segmentation.target_words < 1 || segmentation.merge_threshold < 0) {
    throw ConfigError("config: bad segmentation settings");
  }
  if (annotation.max_retries < 0 || annotation.backoff_ms < 0 || annotation.concurrency < 1 ||
      annotation.temperature < 0) {
    throw ConfigError("config: bad annotation settings");
  }
  resampling.validate();
  if (analysis.min_count < 0 || analysis.role_support_floor < 0) {
    throw ConfigError("config: analysis floors must be >= 0");
  }
  if (!(analysis.motif_prevalence_floor >= 0.0 && analysis.motif_prevalence_floor <= 1.0)) {
    throw ConfigError("config: motif_prevalence_floor outside [0, 1]");
  }
}

inline json RunConfig::to_json() const {
  json g = json::array();
  for (const auto& group : groups) g.push_back({{"id", group.id}, {"queries", group.queries}});
  json annotation_json = {{"base_url", annotation.base_url},
                          {"path", annotation.path},
                          {"model", annotation.model},
                          {"temperature", annotation.temperature},
                          {"max_tokens", annotation.max_tokens ? json(*annotation.max_tokens) : json(nullptr)},
                          {"timeout_seconds", annotation.timeout_seconds},
                          {"max_retries", annotation.max_retries},
                          {"backoff_ms", annotation.backoff_ms},
                          {"concurrency", annotation.concurrency},
                          {"cache_dir", annotation_cache_dir},
                          {"prompt_template", prompt_template}};
  return {
      {"groups", g},
      {"harvest",
       {{"published_after", harvest.published_after},
        {"published_before", harvest.published_before},
        {"duration", harvest.duration},
        {"language", harvest.language},
        {"max_results", harvest.max_results},
        {"order", harvest.order},
        {"requests_per_second", harvest_requests_per_second},
        {"cache_dir", harvest_cache_dir}}},
      {"dataset_rules",
       {{"min_comments_per_video", rules.min_comments_per_video},
        {"comment_word_bounds", {rules.comment_word_bounds.min, rules.comment_word_bounds.max}},
        {"drop_within_group_duplicates", rules.drop_within_group_duplicates},
        {"drop_cross_partisan_duplicates", rules.drop_cross_partisan_duplicates},
        {"drop_neutral_partisan_overlap", rules.drop_neutral_partisan_overlap},
        {"top_level_comments_only", rules.top_level_comments_only},
        {"neutral_group", rules.neutral_group},
        {"israeli_leaning_group", rules.partisan_groups[0]},
        {"palestinian_leaning_group", rules.partisan_groups[1]}}},
      {"segmentation",
       {{"target_words", segmentation.target_words}, {"merge_threshold", segmentation.merge_threshold}}},
      {"annotation", annotation_json},
      {"resampling",
       {{"n_replicates", resampling.n_replicates},
        {"ci_level", resampling.ci_level},
        {"seed", resampling.seed},
        {"unit", unit_name(resampling.unit)},
        {"threads", resampling.threads}}},
      {"analysis",
       {{"min_count", analysis.min_count},
        {"divergence_mode", mode_name(analysis.divergence_mode)},
        {"permutation", permutation_name(analysis.permutation)},
        {"motif_denominator", denominator_name(analysis.motif_denominator)},
        {"motif_matching", matching_name(analysis.motif_matching)},
        {"motif_prevalence_floor", analysis.motif_prevalence_floor},
        {"role_support_floor", analysis.role_support_floor},
        {"exclude_meta", analysis.exclude_meta}}},
      {"taxonomy", taxonomy},
      {"output_dir", output_dir}};
}

inline RunConfig RunConfig::from_json(const json& j) {
  // Absent keys keep their built-in defaults.
  RunConfig c = RunConfig::defaults();
  detail::ObjectReader top(j, "config");
  if (const json* groups = top.child("groups")) {
    if (!groups->is_array()) throw ConfigError("config: groups must be an array");
    c.groups.clear();
    for (const auto& gj : *groups) {
      detail::ObjectReader r(gj, "groups[]");
      GroupQueries g;
      r.read("id", g.id);
      r.read("queries", g.queries);
      r.finish();
      c.groups.push_back(std::move(g));
    }
  }
  if (const json* h = top.child("harvest")) {
    detail::ObjectReader r(*h, "harvest");
    r.read("published_after", c.harvest.published_after);
    r.read("published_before", c.harvest.published_before);
    r.read("duration", c.harvest.duration);
    r.read("language", c.harvest.language);
    r.read("max_results", c.harvest.max_results);
    r.read("order", c.harvest.order);
    r.read("requests_per_second", c.harvest_requests_per_second);
    r.read("cache_dir", c.harvest_cache_dir);
    r.finish();
  }
  if (const json* d = top.child("dataset_rules")) {
    detail::ObjectReader r(*d, "dataset_rules");
    r.read("min_comments_per_video", c.rules.min_comments_per_video);
    std::array<std::int64_t, 2> bounds = {c.rules.comment_word_bounds.min, c.rules.comment_word_bounds.max};
    r.read("comment_word_bounds", bounds);
    c.rules.comment_word_bounds = {bounds[0], bounds[1]};
    r.read("drop_within_group_duplicates", c.rules.drop_within_group_duplicates);
    r.read("drop_cross_partisan_duplicates", c.rules.drop_cross_partisan_duplicates);
    r.read("drop_neutral_partisan_overlap", c.rules.drop_neutral_partisan_overlap);
    r.read("top_level_comments_only", c.rules.top_level_comments_only);
    r.read("neutral_group", c.rules.neutral_group);
    r.read("israeli_leaning_group", c.rules.partisan_groups[0]);
    r.read("palestinian_leaning_group", c.rules.partisan_groups[1]);
    r.finish();
  }
  if (const json* s = top.child("segmentation")) {
    detail::ObjectReader r(*s, "segmentation");
    r.read("target_words", c.segmentation.target_words);
    r.read("merge_threshold", c.segmentation.merge_threshold);
    r.finish();
  }
  if (const json* a = top.child("annotation")) {
    detail::ObjectReader r(*a, "annotation");
    r.read("base_url", c.annotation.base_url);
    r.read("path", c.annotation.path);
    r.read("model", c.annotation.model);
    r.read("temperature", c.annotation.temperature);
    r.read_optional("max_tokens", c.annotation.max_tokens);
    r.read("timeout_seconds", c.annotation.timeout_seconds);
    r.read("max_retries", c.annotation.max_retries);
    r.read("backoff_ms", c.annotation.backoff_ms);
    r.read("concurrency", c.annotation.concurrency);
    r.read("cache_dir", c.annotation_cache_dir);
    r.read("prompt_template", c.prompt_template);
    r.finish();
  }
  if (const json* s = top.child("resampling")) {
    detail::ObjectReader r(*s, "resampling");
    r.read("n_replicates", c.resampling.n_replicates);
    r.read("ci_level", c.resampling.ci_level);
    r.read("seed", c.resampling.seed);
    std::string unit(unit_name(c.resampling.unit));
    r.read("unit", unit);
    c.resampling.unit = detail::parse_enum<ResampleUnit, 2>(
        unit, {{{"document", ResampleUnit::Document}, {"video", ResampleUnit::Video}}}, "resampling unit");
    r.read("threads", c.resampling.threads);
    r.finish();
  }
  if (const json* s = top.child("analysis")) {
    detail::ObjectReader r(*s, "analysis");
    auto& a = c.analysis;
    r.read("min_count", a.min_count);
    std::string mode(mode_name(a.divergence_mode)), perm(permutation_name(a.permutation)),
        denom(denominator_name(a.motif_denominator)), match(matching_name(a.motif_matching));
    r.read("divergence_mode", mode);
    r.read("permutation", perm);
    r.read("motif_denominator", denom);
    r.read("motif_matching", match);
    a.divergence_mode = detail::parse_enum<DivergenceMode, 2>(
        mode, {{{"reduced", DivergenceMode::Reduced}, {"full", DivergenceMode::Full}}}, "divergence_mode");
    a.permutation = detail::parse_enum<PermutationMode, 2>(
        perm, {{{"per_object", PermutationMode::PerObject}, {"joint", PermutationMode::Joint}}}, "permutation");
    a.motif_denominator = detail::parse_enum<MotifDenominator, 2>(
        denom, {{{"all_frames", MotifDenominator::AllFrames}, {"complete_frames", MotifDenominator::CompleteFrames}}},
        "motif_denominator");
    a.motif_matching = detail::parse_enum<MotifMatching, 2>(
        match, {{{"side", MotifMatching::SideLevel}, {"actor", MotifMatching::ActorLevel}}}, "motif_matching");
    r.read("motif_prevalence_floor", a.motif_prevalence_floor);
    r.read("role_support_floor", a.role_support_floor);
    r.read("exclude_meta", a.exclude_meta);
    r.finish();
  }
  top.read("taxonomy", c.taxonomy);
  top.read("output_dir", c.output_dir);
  top.finish();
  c.validate();
  return c;
}

inline RunConfig RunConfig::load(const std::filesystem::path& path) {
  auto text = read_file(path);
  if (!text) throw ConfigError("cannot read config " + path.string());
  json j = json::parse(*text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
  return from_json(j);
}

inline std::string RunConfig::hash() const {
  json j = to_json();
  j.erase("output_dir");
  j["resampling"].erase("threads");
  return sha256_hex(j.dump());
}

inline Taxonomy RunConfig::load_taxonomy() const {
  if (taxonomy.empty()) return Taxonomy::paper_default();
  auto text = read_file(taxonomy);
  if (!text) throw ConfigError("cannot read taxonomy " + taxonomy);
  json j = json::parse(*text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("taxonomy " + taxonomy + " is not valid JSON");
  return Taxonomy::from_json(j);
}

inline PromptTemplate RunConfig::load_prompt_template() const {
  return prompt_template.empty() ? PromptTemplate{} : PromptTemplate::load(prompt_template);
}

}  // namespace narrapol
