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

// Analysis bundles: every artifact the figures and tables are drawn from,
// emitted as JSON with CSV twins and a manifest. Output depends only on the
// corpus, the configuration and the seed.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "narrapol/agreement.hpp"
#include "narrapol/config.hpp"
#include "narrapol/corpus.hpp"
#include "narrapol/error.hpp"
#include "narrapol/hash.hpp"
#include "narrapol/http.hpp"
#include "narrapol/ingest.hpp"
#include "narrapol/metrics.hpp"
#include "narrapol/model.hpp"
#include "narrapol/resample.hpp"

namespace narrapol {

using ojson = nlohmann::ordered_json;

inline constexpr int kArtifactSchemaVersion = 1;

struct Artifact {
  std::string name;
  std::string content;
};

struct Bundle {
  std::vector<Artifact> files;  // manifest.json last
  std::vector<std::string> warnings;

  const Artifact* find(std::string_view name) const {
    for (const auto& f : files) {
      if (f.name == name) return &f;
    }
    return nullptr;
  }

  void write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& f : files) write_file_atomic(dir / f.name, f.content);
  }
};

// Identity stamped into every artifact.
struct RunStamp {
  std::string config_hash;
  std::string taxonomy_hash;
  std::uint64_t seed = 0;
  std::string variant = "main";
};

namespace detail {

// ---------------------------------------------------------------------------
// Compact per-frame codes for resampling
// ---------------------------------------------------------------------------

inline constexpr std::array<ActantRole, 3> kDivergenceRoles = {ActantRole::Sender, ActantRole::Receiver,
                                                               ActantRole::Opponent};

struct FrameCode {
  const std::string* video = nullptr;
  std::int8_t object = -1;   // index into the taxonomy's objects; -1 absent
  std::int8_t subject = -1;  // side of the subject; -1 absent
  std::array<std::int8_t, 3> roles{-1, -1, -1};  // sides of sender, receiver, opponent
  std::uint8_t motifs = 0;    // bit per MotifKind
  std::uint8_t complete = 0;  // bit per MotifKind: required slots present and sided
};

inline const std::string& video_of(const FrameCode& code) { return *code.video; }

inline std::uint8_t motif_bit(MotifKind kind) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(kind)); }

inline std::int8_t side_code(const std::optional<std::string>& slot, const SideMap& map) {
  return slot ? static_cast<std::int8_t>(map.side_of(*slot)) : std::int8_t{-1};
}

inline FrameCode encode(const Document& doc, const Taxonomy& taxonomy, const SideMap& map, MotifMatching matching) {
  const ActantFrame& f = *doc.frame;
  FrameCode c;
  c.video = &doc.video_id;
  if (f.object) {
    const auto& objects = taxonomy.objects();
    auto it = std::find(objects.begin(), objects.end(), *f.object);
    if (it != objects.end()) c.object = static_cast<std::int8_t>(it - objects.begin());
  }
  c.subject = side_code(f.subject, map);
  for (std::size_t r = 0; r < kDivergenceRoles.size(); ++r) c.roles[r] = side_code(f.slot(kDivergenceRoles[r]), map);
  for (const auto& m : classify_motifs(f, map, matching)) c.motifs |= motif_bit(m.kind);
  for (MotifKind kind : kAllMotifs) {
    if (motif_slots_complete(f, kind, map)) c.complete |= motif_bit(kind);
  }
  return c;
}

using Codes = std::vector<FrameCode>;
using CodeSpan = std::span<const FrameCode>;

inline std::array<std::int64_t, 3> subject_counts(CodeSpan codes) {
  std::array<std::int64_t, 3> counts{};
  for (const auto& c : codes) {
    if (c.subject >= 0) ++counts[static_cast<std::size_t>(c.subject)];
  }
  return counts;
}

// Share of codes whose predicate bit is set.
template <typename Pred>
std::optional<double> share_of(CodeSpan codes, Pred&& pred) {
  if (codes.empty()) return std::nullopt;
  std::int64_t hits = 0;
  for (const auto& c : codes) hits += pred(c);
  return static_cast<double>(hits) / static_cast<double>(codes.size());
}

template <typename Pred>
TwoSampleStatistic<FrameCode> share_difference(Pred pred) {
  return [pred](CodeSpan a, CodeSpan b) -> std::optional<double> {
    auto x = share_of(a, pred), y = share_of(b, pred);
    if (!x || !y) return std::nullopt;
    return *x - *y;
  };
}

template <typename Pred>
Codes select(const Codes& codes, Pred&& pred) {
  Codes out;
  for (const auto& c : codes) {
    if (pred(c)) out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

inline ojson number_or_null(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

inline ojson header(std::string_view artifact, const RunStamp& stamp) {
  return {{"artifact", artifact},
          {"schema_version", kArtifactSchemaVersion},
          {"tool_version", kToolVersion},
          {"config_hash", stamp.config_hash},
          {"taxonomy_hash", stamp.taxonomy_hash},
          {"seed", stamp.seed},
          {"variant", stamp.variant}};
}

inline std::string csv_field(const ojson& v) {
  if (v.is_null()) return "";
  std::string text = v.is_string() ? v.get<std::string>() : v.dump();
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

// Flat table: header row then one line per record, columns in `columns` order.
inline std::string to_csv(const std::vector<std::string>& columns, const std::vector<ojson>& rows) {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out += ',';
      auto it = row.find(columns[i]);
      if (it != row.end()) out += csv_field(*it);
    }
    out += '\n';
  }
  return out;
}

inline std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Analysis
// ---------------------------------------------------------------------------

namespace detail {

struct Slice {
  std::vector<const Document*> docs;
  std::vector<const ActantFrame*> frames;
  Codes codes;
  std::int64_t failed = 0;
};

using SliceKey = std::pair<DocumentKind, std::string>;  // kind, group

class Analyzer {
 public:
  Analyzer(const RunConfig& config, const Corpus& corpus, const Taxonomy& taxonomy, RunStamp stamp)
      : config_(config), corpus_(corpus), taxonomy_(taxonomy), map_(taxonomy.side_map()), stamp_(std::move(stamp)) {
    il_ = config.rules.partisan_groups[0];
    pl_ = config.rules.partisan_groups[1];
    for (const auto& doc : corpus) {
      auto& slice = slices_[{doc.kind, doc.group}];
      if (doc.annotation_error) {
        ++slice.failed;
        continue;
      }
      if (!doc.frame) {
        throw DataContractError("document '" + doc.id + "' has no frame; run annotate before analyze");
      }
      taxonomy.validate(*doc.frame);
      slice.docs.push_back(&doc);
      slice.frames.push_back(&*doc.frame);
    }
    for (auto& [key, slice] : slices_) {
      for (const Document* doc : slice.docs) {
        slice.codes.push_back(encode(*doc, taxonomy, map_, config.analysis.motif_matching));
      }
    }
    for (DocumentKind kind : {DocumentKind::TranscriptSegment, DocumentKind::Comment}) {
      if (has(kind, il_) && has(kind, pl_)) kinds_.push_back(kind);
    }
    if (kinds_.empty()) {
      throw ConfigError("analyze: needs annotated documents from both '" + il_ + "' and '" + pl_ +
                        "' for at least one document kind");
    }
  }

  Bundle run() {
    Bundle bundle;
    add(bundle, "heatmap", heatmap());
    add(bundle, "overlap", overlap());
    add(bundle, "divergence", divergence());
    add(bundle, "role_divergence", role_divergence());
    add(bundle, "motifs", motifs());
    add(bundle, "group_stats", group_stats_table());
    add(bundle, "missingness", missingness());
    add(bundle, "attribution_shares", attribution());
    bundle.warnings = warnings_;
    finish(bundle);
    return bundle;
  }

  // Appends the manifest covering every file already in the bundle.
  void finish(Bundle& bundle) const {
    ojson files = ojson::array();
    for (const auto& f : bundle.files) {
      files.push_back({{"name", f.name}, {"sha256", sha256_hex(f.content)}, {"bytes", f.content.size()}});
    }
    std::int64_t annotated = 0, failed = 0;
    for (const auto& [key, slice] : slices_) {
      annotated += static_cast<std::int64_t>(slice.docs.size());
      failed += slice.failed;
    }
    ojson manifest = header("manifest", stamp_);
    manifest["documents"] = corpus_.size();
    manifest["annotated"] = annotated;
    manifest["annotation_failed"] = failed;
    manifest["groups"] = {{"israeli_leaning", il_}, {"palestinian_leaning", pl_}};
    manifest["files"] = files;
    manifest["warnings"] = bundle.warnings;
    bundle.files.push_back({"manifest.json", dump(manifest)});
  }

 private:
  struct Table {
    ojson json;
    std::vector<std::string> columns;
    std::vector<ojson> rows;
  };

  void add(Bundle& bundle, const std::string& name, const Table& table) {
    bundle.files.push_back({name + ".json", dump(table.json)});
    bundle.files.push_back({name + ".csv", to_csv(table.columns, table.rows)});
  }

  bool has(DocumentKind kind, const std::string& group) const {
    auto it = slices_.find({kind, group});
    return it != slices_.end() && !it->second.docs.empty();
  }

  const Slice& slice(DocumentKind kind, const std::string& group) const { return slices_.at({kind, group}); }

  std::vector<std::string> groups_of(DocumentKind kind) const {
    std::vector<std::string> out;
    for (const auto& [key, s] : slices_) {
      if (key.first == kind && !s.docs.empty()) out.push_back(key.second);
    }
    return out;
  }

  std::string kind_str(DocumentKind kind) const { return std::string(kind_name(kind)); }

  ResamplingConfig resampling() const { return config_.resampling; }

  Units units(const Codes& codes) const { return make_units(CodeSpan(codes), config_.resampling.unit); }

  // Percentile interval, or nulls with a warning when resampling fails.
  std::pair<ojson, ojson> interval(const TwoSampleStatistic<FrameCode>& stat, const Codes& a, const Codes& b,
                                   const std::string& what) {
    try {
      auto ci = bootstrap_ci<FrameCode>(stat, CodeSpan(a), CodeSpan(b), resampling(), units(a), units(b));
      return {ci.low, ci.high};
    } catch (const DataContractError& e) {
      warnings_.push_back(what + ": " + e.what());
      return {nullptr, nullptr};
    }
  }

  // -- heatmap --------------------------------------------------------------

  ojson matrix_json(const CooccurrenceMatrix& m, const std::string& kind, const std::string& scope,
                    std::vector<ojson>& rows) const {
    ojson cells = ojson::array();
    for (std::size_t i = 0; i < m.subjects.size(); ++i) {
      for (std::size_t j = 0; j < m.objects.size(); ++j) {
        const auto& c = m.cells[i][j];
        ojson cell = {{"subject", m.subjects[i]},
                      {"object", m.objects[j]},
                      {"count", c.count},
                      {"prevalence", m.total ? static_cast<double>(c.count) / static_cast<double>(m.total) : 0.0},
                      {"expected", c.expected},
                      {"log_ratio", number_or_null(c.log_ratio)},
                      {"zero_observed", c.zero_observed},
                      {"below_min_count", c.below_min_count}};
        ojson row = {{"kind", kind}, {"scope", scope}};
        for (const auto& [k, v] : cell.items()) row[k] = v;
        rows.push_back(std::move(row));
        cells.push_back(std::move(cell));
      }
    }
    return {{"subjects", m.subjects}, {"objects", m.objects}, {"total", m.total}, {"cells", cells}};
  }

  Table heatmap() {
    Table t;
    t.json = header("heatmap", stamp_);
    t.json["min_count"] = config_.analysis.min_count;
    t.json["exclude_meta"] = config_.analysis.exclude_meta;
    ojson kinds = ojson::object();
    for (DocumentKind kind : {DocumentKind::TranscriptSegment, DocumentKind::Comment}) {
      const auto groups = groups_of(kind);
      if (groups.empty()) continue;
      std::vector<const ActantFrame*> pooled;
      for (const auto& g : groups) {
        const auto& f = slice(kind, g).frames;
        pooled.insert(pooled.end(), f.begin(), f.end());
      }
      auto matrix = [&](const std::vector<const ActantFrame*>& frames, const std::string& scope) -> ojson {
        try {
          return matrix_json(cooccurrence_log_ratios(frames, config_.analysis.min_count, config_.analysis.exclude_meta),
                             kind_str(kind), scope, t.rows);
        } catch (const EmptySliceError& e) {
          warnings_.push_back("heatmap " + kind_str(kind) + " " + scope + ": " + e.what());
          return nullptr;
        }
      };
      ojson entry = {{"all", matrix(pooled, "all")}};
      ojson per_group = ojson::object();
      for (const auto& g : groups) per_group[g] = matrix(slice(kind, g).frames, g);
      entry["groups"] = per_group;
      kinds[kind_str(kind)] = entry;
    }
    t.json["kinds"] = kinds;
    t.columns = {"kind", "scope", "subject", "object", "count", "prevalence", "expected", "log_ratio",
                 "zero_observed", "below_min_count"};
    return t;
  }

  // -- overlap --------------------------------------------------------------

  std::optional<NarrativeDistribution> distribution(DocumentKind kind, const std::string& group) {
    if (!has(kind, group)) return std::nullopt;
    try {
      return surface_distribution(slice(kind, group).frames, config_.analysis.exclude_meta);
    } catch (const EmptySliceError& e) {
      warnings_.push_back("overlap " + kind_str(kind) + " " + group + ": " + e.what());
      return std::nullopt;
    }
  }

  Table overlap() {
    Table t;
    t.json = header("overlap", stamp_);
    ojson within = ojson::array(), between = ojson::array();
    std::set<std::string> groups;
    for (const auto& [key, s] : slices_) {
      if (!s.docs.empty()) groups.insert(key.second);
    }
    for (const auto& g : groups) {
      auto tr = distribution(DocumentKind::TranscriptSegment, g);
      auto co = distribution(DocumentKind::Comment, g);
      if (!tr || !co) continue;
      ojson row = {{"comparison", "within"}, {"group_a", g}, {"kind_a", "transcript_segment"},
                   {"group_b", g}, {"kind_b", "comment"}, {"overlap", overlap_coefficient(*tr, *co)}};
      within.push_back(row);
      t.rows.push_back(row);
    }
    for (DocumentKind kind : {DocumentKind::TranscriptSegment, DocumentKind::Comment}) {
      auto a = distribution(kind, il_);
      auto b = distribution(kind, pl_);
      if (!a || !b) continue;
      ojson row = {{"comparison", "between"}, {"group_a", il_}, {"kind_a", kind_str(kind)},
                   {"group_b", pl_}, {"kind_b", kind_str(kind)}, {"overlap", overlap_coefficient(*a, *b)}};
      between.push_back(row);
      t.rows.push_back(row);
    }
    t.json["exclude_meta"] = config_.analysis.exclude_meta;
    t.json["within"] = within;
    t.json["between"] = between;
    t.columns = {"comparison", "group_a", "kind_a", "group_b", "kind_b", "overlap"};
    return t;
  }

  // -- subject divergence ---------------------------------------------------

  bool in_subject_slice(const FrameCode& c, std::int8_t object) const {
    if (c.object != object || c.subject < 0) return false;
    return config_.analysis.divergence_mode == DivergenceMode::Full || c.subject != static_cast<std::int8_t>(Side::UNK);
  }

  Table divergence() {
    const auto mode = config_.analysis.divergence_mode;
    const auto cfg = resampling();
    TwoSampleStatistic<FrameCode> stat = [mode](CodeSpan a, CodeSpan b) {
      return divergence_from_counts(subject_counts(a), subject_counts(b), mode);
    };

    Table t;
    t.json = header("divergence", stamp_);
    t.json["mode"] = mode_name(mode);
    t.json["permutation"] = permutation_name(config_.analysis.permutation);
    t.json["n_replicates"] = cfg.n_replicates;
    t.json["ci_level"] = cfg.ci_level;
    t.json["resample_unit"] = unit_name(cfg.unit);
    ojson kinds = ojson::object();

    for (DocumentKind kind : kinds_) {
      const Codes& il_all = slice(kind, il_).codes;
      const Codes& pl_all = slice(kind, pl_).codes;
      const auto& objects = taxonomy_.objects();
      struct Row {
        std::size_t object;
        double estimate;
        ojson low, high;
        double p;
        std::int64_t n_il, n_pl;
      };
      std::vector<Row> rows;
      std::vector<std::optional<double>> joint_p;

      if (config_.analysis.permutation == PermutationMode::Joint) {
        // One shuffle of whole documents per permutation; every object's
        // divergence recomputed on it.
        const auto keep = [](const FrameCode& c) { return c.object >= 0 && c.subject >= 0; };
        Codes a = select(il_all, keep), b = select(pl_all, keep);
        const std::size_t n_objects = objects.size();
        MultiStatistic<FrameCode> multi = [this, n_objects, mode](CodeSpan x, CodeSpan y) {
          std::vector<std::array<std::int64_t, 3>> cx(n_objects), cy(n_objects);
          for (const auto& c : x) ++cx[static_cast<std::size_t>(c.object)][static_cast<std::size_t>(c.subject)];
          for (const auto& c : y) ++cy[static_cast<std::size_t>(c.object)][static_cast<std::size_t>(c.subject)];
          std::vector<std::optional<double>> out(n_objects);
          for (std::size_t o = 0; o < n_objects; ++o) out[o] = divergence_from_counts(cx[o], cy[o], mode);
          return out;
        };
        if (!a.empty() && !b.empty()) {
          auto results = permutation_test_joint<FrameCode>(multi, CodeSpan(a), CodeSpan(b), cfg, units(a), units(b));
          joint_p.resize(n_objects);
          auto observed = multi(CodeSpan(a), CodeSpan(b));
          for (std::size_t o = 0; o < n_objects; ++o) {
            if (observed[o]) joint_p[o] = results[o].p_value;
          }
        }
      }

      ojson skipped = ojson::array();
      for (std::size_t o = 0; o < objects.size(); ++o) {
        const auto object_code = static_cast<std::int8_t>(o);
        auto keep = [&](const FrameCode& c) { return in_subject_slice(c, object_code); };
        Codes a = select(il_all, keep), b = select(pl_all, keep);
        auto estimate = stat(CodeSpan(a), CodeSpan(b));
        if (!estimate) {
          skipped.push_back(objects[o]);
          warnings_.push_back("divergence " + kind_str(kind) + " " + objects[o] + ": a group has no usable subjects");
          continue;
        }
        const std::string what = "divergence " + kind_str(kind) + " " + objects[o];
        auto [low, high] = interval(stat, a, b, what);
        double p = 1.0;
        if (config_.analysis.permutation == PermutationMode::Joint) {
          p = joint_p.at(o).value_or(1.0);
        } else {
          p = permutation_test<FrameCode>(stat, CodeSpan(a), CodeSpan(b), cfg, units(a), units(b)).p_value;
        }
        rows.push_back({o, *estimate, low, high, p, static_cast<std::int64_t>(a.size()),
                        static_cast<std::int64_t>(b.size())});
      }

      std::vector<double> ps, estimates;
      for (const auto& r : rows) {
        ps.push_back(r.p);
        estimates.push_back(r.estimate);
      }
      const auto bonf = adjust_bonferroni(ps);
      const auto fdr = adjust_bh_fdr(ps);
      ojson list = ojson::array();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        ojson entry = {{"object", objects[r.object]},
                       {"estimate", r.estimate},
                       {"ci_low", r.low},
                       {"ci_high", r.high},
                       {"p", r.p},
                       {"bonferroni", bonf[i]},
                       {"fdr", fdr[i]},
                       {"n_IL", r.n_il},
                       {"n_PL", r.n_pl},
                       {"seed", cfg.seed},
                       {"n_replicates", cfg.n_replicates}};
        list.push_back(entry);
        ojson row = {{"kind", kind_str(kind)}};
        for (const auto& [k, v] : entry.items()) row[k] = v;
        t.rows.push_back(std::move(row));
      }
      kinds[kind_str(kind)] = {{"objects", list},
                               {"mean_abs_divergence", estimates.empty() ? ojson(nullptr) : ojson(mean_abs_divergence(estimates))},
                               {"skipped", skipped}};
    }
    t.json["kinds"] = kinds;
    t.columns = {"kind", "object", "estimate", "ci_low", "ci_high", "p", "bonferroni", "fdr", "n_IL", "n_PL",
                 "seed", "n_replicates"};
    return t;
  }

  // -- role divergence ------------------------------------------------------

  Table role_divergence() {
    Table t;
    t.json = header("role_divergence", stamp_);
    t.json["support_floor"] = config_.analysis.role_support_floor;
    t.json["n_replicates"] = config_.resampling.n_replicates;
    t.json["ci_level"] = config_.resampling.ci_level;
    ojson kinds = ojson::object();
    const auto& objects = taxonomy_.objects();
    for (DocumentKind kind : kinds_) {
      ojson list = ojson::array();
      for (Side side : {Side::IS, Side::PA}) {
        for (std::size_t o = 0; o < objects.size(); ++o) {
          for (std::size_t r = 0; r < kDivergenceRoles.size(); ++r) {
            auto keep = [&](const FrameCode& c) {
              return c.subject == static_cast<std::int8_t>(side) && c.object == static_cast<std::int8_t>(o) &&
                     (c.roles[r] == 0 || c.roles[r] == 1);
            };
            Codes a = select(slice(kind, il_).codes, keep), b = select(slice(kind, pl_).codes, keep);
            auto stat = share_difference([r](const FrameCode& c) { return c.roles[r] == 0; });
            auto estimate = stat(CodeSpan(a), CodeSpan(b));
            ojson low = nullptr, high = nullptr;
            if (estimate) {
              std::tie(low, high) = interval(stat, a, b,
                                             "role divergence " + kind_str(kind) + " " + std::string(side_name(side)) +
                                                 "/" + objects[o] + "/" + std::string(role_name(kDivergenceRoles[r])));
            }
            const auto n_a = static_cast<std::int64_t>(a.size()), n_b = static_cast<std::int64_t>(b.size());
            ojson entry = {{"subject_side", side_name(side)},
                           {"object", objects[o]},
                           {"role", role_name(kDivergenceRoles[r])},
                           {"estimate", number_or_null(estimate)},
                           {"ci_low", low},
                           {"ci_high", high},
                           {"n_IL", n_a},
                           {"n_PL", n_b},
                           {"low_support", n_a < config_.analysis.role_support_floor ||
                                               n_b < config_.analysis.role_support_floor}};
            list.push_back(entry);
            ojson row = {{"kind", kind_str(kind)}};
            for (const auto& [k, v] : entry.items()) row[k] = v;
            t.rows.push_back(std::move(row));
          }
        }
      }
      kinds[kind_str(kind)] = list;
    }
    t.json["kinds"] = kinds;
    t.columns = {"kind", "subject_side", "object", "role", "estimate", "ci_low", "ci_high", "n_IL", "n_PL",
                 "low_support"};
    return t;
  }

  // -- motifs ---------------------------------------------------------------

  Table motifs() {
    Table t;
    const auto& a_opts = config_.analysis;
    t.json = header("motifs", stamp_);
    t.json["denominator"] = denominator_name(a_opts.motif_denominator);
    t.json["matching"] = matching_name(a_opts.motif_matching);
    t.json["prevalence_floor"] = a_opts.motif_prevalence_floor;
    t.json["n_replicates"] = config_.resampling.n_replicates;
    t.json["ci_level"] = config_.resampling.ci_level;
    ojson kinds = ojson::object();
    const auto& objects = taxonomy_.objects();
    for (DocumentKind kind : kinds_) {
      ojson list = ojson::array();
      for (Side side : {Side::IS, Side::PA}) {
        for (std::size_t o = 0; o < objects.size(); ++o) {
          for (MotifKind motif : kAllMotifs) {
            const auto bit = motif_bit(motif);
            auto keep = [&](const FrameCode& c) {
              if (c.subject != static_cast<std::int8_t>(side) || c.object != static_cast<std::int8_t>(o)) return false;
              return a_opts.motif_denominator == MotifDenominator::AllFrames || (c.complete & bit) != 0;
            };
            Codes a = select(slice(kind, il_).codes, keep), b = select(slice(kind, pl_).codes, keep);
            auto hit = [bit](const FrameCode& c) { return (c.motifs & bit) != 0; };
            auto count = [&](const Codes& codes) {
              MotifShare s;
              s.denominator = static_cast<std::int64_t>(codes.size());
              for (const auto& c : codes) s.motif_count += hit(c);
              return s;
            };
            const MotifShare sa = count(a), sb = count(b);
            ojson entry = {{"subject_side", side_name(side)},
                           {"object", objects[o]},
                           {"motif", motif_name(motif)},
                           {"share_IL", number_or_null(sa.share())},
                           {"share_PL", number_or_null(sb.share())},
                           {"n_IL", sa.denominator},
                           {"n_PL", sb.denominator}};
            if (sa.share() && sb.share()) {
              auto d = motif_difference_from(sa, sb, a_opts.motif_prevalence_floor);
              auto [low, high] = interval(share_difference(hit), a, b,
                                          "motif " + kind_str(kind) + " " + std::string(side_name(side)) + "/" +
                                              objects[o] + "/" + std::string(motif_name(motif)));
              entry["difference"] = d.estimate;
              entry["ci_low"] = low;
              entry["ci_high"] = high;
              entry["suppressed"] = d.suppressed;
            } else {
              entry["difference"] = nullptr;
              entry["ci_low"] = nullptr;
              entry["ci_high"] = nullptr;
              entry["suppressed"] = true;
            }
            list.push_back(entry);
            ojson row = {{"kind", kind_str(kind)}};
            for (const auto& [k, v] : entry.items()) row[k] = v;
            t.rows.push_back(std::move(row));
          }
        }
      }
      kinds[kind_str(kind)] = list;
    }
    t.json["kinds"] = kinds;
    t.columns = {"kind", "subject_side", "object", "motif", "share_IL", "share_PL", "n_IL", "n_PL",
                 "difference", "ci_low", "ci_high", "suppressed"};
    return t;
  }

  // -- dataset statistics ---------------------------------------------------

  Table group_stats_table() {
    Table t;
    t.json = header("group_stats", stamp_);
    ojson list = ojson::array();
    for (const auto& s : group_stats(corpus_)) {
      ojson entry = {{"group", s.group},
                     {"videos", s.videos},
                     {"segments", s.segments},
                     {"comments", s.comments},
                     {"normalized_entropy", s.normalized_entropy},
                     {"mean_word_count", s.mean_word_count},
                     {"comment_view_correlation", number_or_null(s.comment_view_correlation)}};
      list.push_back(entry);
      t.rows.push_back(entry);
    }
    t.json["groups"] = list;
    t.columns = {"group", "videos", "segments", "comments", "normalized_entropy", "mean_word_count",
                 "comment_view_correlation"};
    return t;
  }

  Table missingness() {
    Table t;
    t.json = header("missingness", stamp_);
    ojson list = ojson::array();
    for (DocumentKind kind : {DocumentKind::TranscriptSegment, DocumentKind::Comment}) {
      std::vector<const ActantFrame*> pooled;
      std::int64_t pooled_failed = 0;
      auto emit = [&](const std::string& scope, const std::vector<const ActantFrame*>& frames, std::int64_t failed) {
        auto m = missing_actant_shares(frames);
        ojson shares = ojson::object();
        ojson row = {{"kind", kind_str(kind)}, {"scope", scope}, {"n", m.n}, {"failed", failed}};
        for (ActantRole role : kAllRoles) {
          shares[std::string(role_name(role))] = m.of(role);
          row[std::string(role_name(role))] = m.of(role);
        }
        list.push_back({{"kind", kind_str(kind)}, {"scope", scope}, {"n", m.n}, {"failed", failed}, {"missing_share", shares}});
        t.rows.push_back(std::move(row));
      };
      const auto groups = groups_of(kind);
      for (const auto& g : groups) {
        const auto& s = slice(kind, g);
        pooled.insert(pooled.end(), s.frames.begin(), s.frames.end());
        pooled_failed += s.failed;
        emit(g, s.frames, s.failed);
      }
      if (!groups.empty()) emit("all", pooled, pooled_failed);
    }
    t.json["slices"] = list;
    t.columns = {"kind", "scope", "n", "failed"};
    for (ActantRole role : kAllRoles) t.columns.emplace_back(role_name(role));
    return t;
  }

  Table attribution() {
    Table t;
    t.json = header("attribution_shares", stamp_);
    ojson list = ojson::array();
    for (DocumentKind kind : {DocumentKind::TranscriptSegment, DocumentKind::Comment}) {
      for (const auto& g : groups_of(kind)) {
        for (const auto& object : taxonomy_.objects()) {
          auto counts = subject_side_counts(slice(kind, g).frames, object, map_);
          if (counts[0] + counts[1] + counts[2] == 0) continue;
          auto s = shares_from_counts(object, counts);
          ojson entry = {{"kind", kind_str(kind)}, {"group", g},       {"object", object},
                         {"p_IS", s.p_is},         {"p_PA", s.p_pa},   {"p_UNK", s.p_unk},
                         {"n", s.n},               {"skew", s.skew()}};
          list.push_back(entry);
          t.rows.push_back(entry);
        }
      }
    }
    t.json["shares"] = list;
    t.columns = {"kind", "group", "object", "p_IS", "p_PA", "p_UNK", "n", "skew"};
    return t;
  }

  const RunConfig& config_;
  const Corpus& corpus_;
  const Taxonomy& taxonomy_;
  const SideMap& map_;
  RunStamp stamp_;
  std::string il_, pl_;
  std::map<SliceKey, Slice> slices_;
  std::vector<DocumentKind> kinds_;
  std::vector<std::string> warnings_;
};

}  // namespace detail

inline std::string taxonomy_hash(const Taxonomy& taxonomy) { return sha256_hex(taxonomy.to_json().dump()); }

// Full analysis bundle for an annotated corpus.
inline Bundle run_analyze(const RunConfig& config, const Corpus& corpus, const Taxonomy& taxonomy,
                          const std::string& variant = "main") {
  config.validate();
  RunStamp stamp{config.hash(), taxonomy_hash(taxonomy), config.resampling.seed, variant};
  return detail::Analyzer(config, corpus, taxonomy, stamp).run();
}

inline Bundle run_analyze(const RunConfig& config, const Corpus& corpus) {
  return run_analyze(config, corpus, config.load_taxonomy());
}

// Record written next to every stage output.
inline std::string stage_report(std::string_view stage, const RunConfig& config, const ojson& body) {
  ojson j = detail::header(stage, {config.hash(), "", config.resampling.seed, "main"});
  j.erase("taxonomy_hash");
  for (const auto& [k, v] : body.items()) j[k] = v;
  return detail::dump(j);
}

// ---------------------------------------------------------------------------
// Robustness variants
// ---------------------------------------------------------------------------

struct RobustnessVariant {
  enum class Kind { DropActorPair, SegmentTarget };
  Kind kind = Kind::DropActorPair;
  std::string first, second;        // actor pair
  std::int64_t target_words = 250;  // segment target

  static RobustnessVariant drop_pair(std::string a, std::string b) {
    return {Kind::DropActorPair, std::move(a), std::move(b), 0};
  }
  static RobustnessVariant segment_target(std::int64_t words) { return {Kind::SegmentTarget, "", "", words}; }

  // "drop:idf,hamas" or "segment:250".
  static RobustnessVariant parse(std::string_view text) {
    if (text.starts_with("drop:")) {
      auto rest = text.substr(5);
      auto comma = rest.find(',');
      if (comma == std::string_view::npos || comma == 0 || comma + 1 == rest.size()) {
        throw ConfigError("robustness: expected drop:<actor>,<actor>");
      }
      return drop_pair(std::string(rest.substr(0, comma)), std::string(rest.substr(comma + 1)));
    }
    if (text.starts_with("segment:")) {
      try {
        std::size_t used = 0;
        const std::string digits(text.substr(8));
        const long long words = std::stoll(digits, &used);
        if (used != digits.size() || words < 1) throw std::invalid_argument("bad");
        return segment_target(words);
      } catch (const std::exception&) {
        throw ConfigError("robustness: expected segment:<positive word count>");
      }
    }
    throw ConfigError("robustness: unknown variant '" + std::string(text) + "'");
  }

  std::string label() const {
    return kind == Kind::DropActorPair ? "drop_" + first + "_" + second : "segment_" + std::to_string(target_words);
  }
};

// Annotates freshly segmented transcripts; the CLI plugs the endpoint in.
using Annotator = std::function<Corpus(const Corpus&)>;

struct RobustnessInputs {
  const Corpus* raw_transcripts = nullptr;  // required by the segment variant
  Annotator annotate;                       // required by the segment variant
};

inline Bundle run_robustness(const RunConfig& config, const Corpus& corpus, const Taxonomy& taxonomy,
                             const RobustnessVariant& variant, const RobustnessInputs& inputs = {}) {
  if (variant.kind == RobustnessVariant::Kind::DropActorPair) {
    Taxonomy modified = taxonomy;
    modified.set_side_map(taxonomy.side_map().without_pair(variant.first, variant.second));
    return run_analyze(config, corpus, modified, variant.label());
  }
  if (!inputs.raw_transcripts || inputs.raw_transcripts->empty()) {
    throw ConfigError("robustness: the segment variant needs the raw transcripts");
  }
  if (!inputs.annotate) throw ConfigError("robustness: the segment variant needs an annotator");
  SegmentationOptions options = config.segmentation;
  options.target_words = variant.target_words;
  Corpus segments = inputs.annotate(segment_corpus(*inputs.raw_transcripts, options));
  Corpus combined;
  for (const auto& doc : corpus) {
    if (doc.kind == DocumentKind::Comment) combined.push_back(doc);
  }
  combined.insert(combined.end(), segments.begin(), segments.end());
  Bundle bundle = run_analyze(config, combined, taxonomy, variant.label());

  // Keep the re-segmented, annotated transcripts next to the analysis.
  std::ostringstream out;
  write_corpus(segments, out);
  bundle.files.pop_back();  // manifest is rebuilt below
  bundle.files.push_back({"segments.jsonl", out.str()});
  RunStamp stamp{config.hash(), taxonomy_hash(taxonomy), config.resampling.seed, variant.label()};
  detail::Analyzer(config, combined, taxonomy, stamp).finish(bundle);
  return bundle;
}

// ---------------------------------------------------------------------------
// Agreement
// ---------------------------------------------------------------------------

inline Bundle run_agreement(const RunConfig& config, const std::vector<std::pair<std::string, Corpus>>& coders) {
  auto report = agreement_report(build_agreement_tables(coders));
  const RunStamp stamp{config.hash(), "", config.resampling.seed, "main"};
  ojson j = detail::header("agreement", stamp);
  ojson names = ojson::array();
  for (const auto& [name, corpus] : coders) names.push_back(name);
  j["coders"] = names;
  std::vector<ojson> rows;
  auto row_json = [](const AgreementRow& r) {
    return ojson{{"actant", r.actant},
                 {"f1_micro", r.f1_micro},
                 {"f1_weighted", r.f1_weighted},
                 {"f1_macro", r.f1_macro},
                 {"alpha", r.alpha},
                 {"alpha_degenerate", r.alpha_degenerate},
                 {"coder_pairs", r.coder_pairs}};
  };
  ojson list = ojson::array();
  for (const auto& r : report.rows) {
    list.push_back(row_json(r));
    rows.push_back(row_json(r));
  }
  j["rows"] = list;
  if (report.average) {
    auto avg = row_json(*report.average);
    avg["actant"] = "average";
    j["average"] = avg;
    rows.push_back(avg);
  } else {
    j["average"] = nullptr;
  }
  j["warnings"] = report.warnings;

  Bundle bundle;
  bundle.warnings = report.warnings;
  bundle.files.push_back({"agreement.json", detail::dump(j)});
  bundle.files.push_back({"agreement.csv", detail::to_csv({"actant", "f1_micro", "f1_weighted", "f1_macro", "alpha"}, rows)});
  ojson manifest = detail::header("manifest", stamp);
  ojson files = ojson::array();
  for (const auto& f : bundle.files) {
    files.push_back({{"name", f.name}, {"sha256", sha256_hex(f.content)}, {"bytes", f.content.size()}});
  }
  manifest["files"] = files;
  manifest["warnings"] = report.warnings;
  bundle.files.push_back({"manifest.json", detail::dump(manifest)});
  return bundle;
}

}  // namespace narrapol
