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

// Narrative measures over annotated frames: surface-narrative distributions
// and their overlap, subject-object co-occurrence, subject attribution and
// divergence between two partisan groups, role divergence, narrative motifs,
// missing-actant shares and group statistics.
//
// Every function taking frames accepts any input range whose elements are
// ActantFrame, Document, or pointers to either; results never depend on
// iteration order.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ranges>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "narrapol/corpus.hpp"
#include "narrapol/error.hpp"
#include "narrapol/model.hpp"

namespace narrapol {

inline const ActantFrame& frame_of(const ActantFrame& frame) noexcept { return frame; }

inline const ActantFrame& frame_of(const Document& doc) noexcept {
  static const ActantFrame kEmpty{};
  return doc.frame ? *doc.frame : kEmpty;
}

template <typename T>
const ActantFrame& frame_of(const T* ptr) noexcept {
  return frame_of(*ptr);
}

template <typename R>
concept FrameRange = std::ranges::input_range<R> && requires(std::ranges::range_reference_t<R> x) {
  { frame_of(x) } -> std::same_as<const ActantFrame&>;
};

// ---------------------------------------------------------------------------
// Surface narratives
// ---------------------------------------------------------------------------

// (subject actor, object) pair.
using NarrativeKey = std::pair<std::string, std::string>;

struct NarrativeDistribution {
  std::map<NarrativeKey, double> mass;
  std::map<NarrativeKey, std::int64_t> support_count;
  std::int64_t total = 0;        // frames contributing mass
  std::int64_t frames_seen = 0;  // all frames in the input
  std::int64_t meta_excluded = 0;

  double meta_excluded_share() const {
    return frames_seen ? static_cast<double>(meta_excluded) / static_cast<double>(frames_seen) : 0.0;
  }
};

// Distribution over (subject, object) pairs of frames where both are present.
// Meta-subject frames (audience or video creator) are dropped when
// `exclude_meta` is set.
template <FrameRange R>
NarrativeDistribution surface_distribution(R&& frames, bool exclude_meta = true) {
  NarrativeDistribution dist;
  for (auto&& item : frames) {
    const ActantFrame& f = frame_of(item);
    ++dist.frames_seen;
    if (exclude_meta && is_meta_subject(f)) {
      ++dist.meta_excluded;
      continue;
    }
    if (!f.subject || !f.object) continue;
    ++dist.support_count[{*f.subject, *f.object}];
    ++dist.total;
  }
  if (dist.total == 0) throw EmptySliceError("surface distribution has empty support");
  for (const auto& [key, count] : dist.support_count) {
    dist.mass[key] = static_cast<double>(count) / static_cast<double>(dist.total);
  }
  return dist;
}

// Shared probability mass: sum over the union support of min(p, q).
inline double overlap_coefficient(const NarrativeDistribution& p, const NarrativeDistribution& q) {
  double shared = 0.0;
  // Keys missing from either side contribute min(x, 0) = 0.
  for (const auto& [key, pm] : p.mass) {
    if (auto it = q.mass.find(key); it != q.mass.end()) shared += std::min(pm, it->second);
  }
  return std::clamp(shared, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Subject-object co-occurrence
// ---------------------------------------------------------------------------

struct CooccurrenceCell {
  std::int64_t count = 0;
  double expected = 0.0;
  // ln(observed / expected); -infinity when the cell is empty.
  double log_ratio = 0.0;
  bool below_min_count = false;
  bool zero_observed = false;
};

// Rows are subjects, columns objects, both ordered by descending marginal
// count then label.
struct CooccurrenceMatrix {
  std::vector<std::string> subjects;
  std::vector<std::string> objects;
  std::vector<std::vector<CooccurrenceCell>> cells;
  std::int64_t total = 0;
  std::int64_t min_count = 60;
};

namespace detail {

inline std::vector<std::string> order_by_margin(const std::map<std::string, std::int64_t>& margin) {
  std::vector<std::string> labels;
  for (const auto& [label, count] : margin) labels.push_back(label);
  std::stable_sort(labels.begin(), labels.end(), [&](const auto& a, const auto& b) {
    return margin.at(a) > margin.at(b);
  });
  return labels;
}

}  // namespace detail

inline CooccurrenceMatrix cooccurrence_log_ratios(const NarrativeDistribution& dist,
                                                  std::int64_t min_count = 60) {
  CooccurrenceMatrix m;
  m.min_count = min_count;
  m.total = dist.total;
  std::map<std::string, std::int64_t> row_total, col_total;
  for (const auto& [key, count] : dist.support_count) {
    row_total[key.first] += count;
    col_total[key.second] += count;
  }
  m.subjects = detail::order_by_margin(row_total);
  m.objects = detail::order_by_margin(col_total);
  const double n = static_cast<double>(dist.total);
  for (const auto& subject : m.subjects) {
    auto& row = m.cells.emplace_back();
    for (const auto& object : m.objects) {
      CooccurrenceCell cell;
      if (auto it = dist.support_count.find({subject, object}); it != dist.support_count.end()) {
        cell.count = it->second;
      }
      cell.expected = static_cast<double>(row_total[subject]) * static_cast<double>(col_total[object]) / n;
      if (cell.count == 0) {
        cell.zero_observed = true;
        cell.log_ratio = -std::numeric_limits<double>::infinity();
      } else {
        cell.log_ratio = std::log(static_cast<double>(cell.count) / cell.expected);
      }
      cell.below_min_count = cell.count < min_count;
      row.push_back(cell);
    }
  }
  return m;
}

template <FrameRange R>
CooccurrenceMatrix cooccurrence_log_ratios(R&& frames, std::int64_t min_count = 60,
                                           bool exclude_meta = true) {
  return cooccurrence_log_ratios(surface_distribution(std::forward<R>(frames), exclude_meta),
                                 min_count);
}

// ---------------------------------------------------------------------------
// Subject attribution and divergence
// ---------------------------------------------------------------------------

struct AttributionShares {
  std::string object;
  double p_is = 0.0;
  double p_pa = 0.0;
  double p_unk = 0.0;
  std::int64_t n = 0;
  std::array<std::int64_t, 3> counts{};  // IS, PA, UNK

  // p(IS) - p(PA).
  double skew() const noexcept { return p_is - p_pa; }
};

template <FrameRange R>
std::array<std::int64_t, 3> subject_side_counts(R&& frames, std::string_view object,
                                                const SideMap& map) {
  std::array<std::int64_t, 3> counts{};
  for (auto&& item : frames) {
    const ActantFrame& f = frame_of(item);
    if (!f.subject || !f.object || *f.object != object) continue;
    ++counts[static_cast<std::size_t>(map.side_of(*f.subject))];
  }
  return counts;
}

inline AttributionShares shares_from_counts(std::string_view object,
                                            const std::array<std::int64_t, 3>& counts) {
  AttributionShares s;
  s.object = std::string(object);
  s.counts = counts;
  s.n = counts[0] + counts[1] + counts[2];
  if (s.n == 0) {
    throw EmptySliceError("no frames with object '" + std::string(object) + "' and a subject");
  }
  const double n = static_cast<double>(s.n);
  s.p_is = static_cast<double>(counts[0]) / n;
  s.p_pa = static_cast<double>(counts[1]) / n;
  s.p_unk = static_cast<double>(counts[2]) / n;
  return s;
}

// Shares of subject sides among frames with the given object and a subject.
template <FrameRange R>
AttributionShares attribution_shares(R&& frames, std::string_view object, const SideMap& map) {
  return shares_from_counts(object, subject_side_counts(std::forward<R>(frames), object, map));
}

enum class DivergenceMode {
  Reduced,  // UNK subjects filtered: D = p(IS) - q(IS)
  Full,     // D = (A_IL - A_PL) / 2 with A = p(IS) - p(PA) over all subjects
};

// Within-group skew for one object. Reduced mode conditions on IS/PA
// subjects and returns p(IS); full mode returns p(IS) - p(PA) over all
// subjects. nullopt when the slice is empty.
inline std::optional<double> attribution_term(const std::array<std::int64_t, 3>& counts,
                                              DivergenceMode mode) {
  if (mode == DivergenceMode::Reduced) {
    const std::int64_t sided = counts[0] + counts[1];
    if (sided == 0) return std::nullopt;
    return static_cast<double>(counts[0]) / static_cast<double>(sided);
  }
  const std::int64_t all = counts[0] + counts[1] + counts[2];
  if (all == 0) return std::nullopt;
  return static_cast<double>(counts[0] - counts[1]) / static_cast<double>(all);
}

inline std::optional<double> divergence_from_counts(const std::array<std::int64_t, 3>& il,
                                                    const std::array<std::int64_t, 3>& pl,
                                                    DivergenceMode mode) {
  auto a = attribution_term(il, mode);
  auto b = attribution_term(pl, mode);
  if (!a || !b) return std::nullopt;
  return mode == DivergenceMode::Reduced ? *a - *b : (*a - *b) / 2.0;
}

// Subject divergence for one object between the Israeli-leaning (first) and
// Palestinian-leaning (second) groups. Positive values mean the first group
// attributes the object more to Israeli actors than the second does.
template <FrameRange A, FrameRange B>
double subject_divergence(A&& il_frames, B&& pl_frames, std::string_view object, const SideMap& map,
                          DivergenceMode mode = DivergenceMode::Reduced) {
  auto d = divergence_from_counts(subject_side_counts(std::forward<A>(il_frames), object, map),
                                  subject_side_counts(std::forward<B>(pl_frames), object, map), mode);
  if (!d) {
    throw EmptySliceError("subject divergence: a group has no usable subjects for object '" +
                          std::string(object) + "'");
  }
  return *d;
}

// ---------------------------------------------------------------------------
// Role divergence
// ---------------------------------------------------------------------------

// A surface narrative at side level: which side desires which object.
struct SidedNarrative {
  Side subject_side = Side::IS;
  std::string object;

  friend auto operator<=>(const SidedNarrative&, const SidedNarrative&) = default;
};

inline bool in_narrative(const ActantFrame& f, const SidedNarrative& narrative, const SideMap& map) {
  return f.subject && f.object && *f.object == narrative.object &&
         map.side_of(*f.subject) == narrative.subject_side;
}

struct RoleDivergence {
  std::optional<double> estimate;  // nullopt when either slice is empty
  std::int64_t n_il = 0;
  std::int64_t n_pl = 0;
  bool low_support = false;
};

inline void require_divergence_role(ActantRole role) {
  if (role != ActantRole::Sender && role != ActantRole::Receiver && role != ActantRole::Opponent) {
    throw ConfigError("role divergence is defined for sender, receiver and opponent only");
  }
}

// Counts of (role side IS, role side IS or PA) within a narrative slice.
template <FrameRange R>
std::pair<std::int64_t, std::int64_t> role_side_counts(R&& frames, ActantRole role,
                                                       const SidedNarrative& narrative,
                                                       const SideMap& map) {
  std::int64_t is = 0, sided = 0;
  for (auto&& item : frames) {
    const ActantFrame& f = frame_of(item);
    if (!in_narrative(f, narrative, map)) continue;
    auto side = slot_side(f.slot(role), map);
    if (!side || !is_sided(*side)) continue;
    ++sided;
    is += *side == Side::IS;
  }
  return {is, sided};
}

// p(role = IS | IL, narrative) - p(role = IS | PL, narrative), over frames in
// the narrative with the role present and sided. Slices with fewer than
// `support_floor` frames in either group are flagged, not dropped.
template <FrameRange A, FrameRange B>
RoleDivergence role_divergence(A&& il_frames, B&& pl_frames, ActantRole role,
                               const SidedNarrative& narrative, const SideMap& map,
                               std::int64_t support_floor = 30) {
  require_divergence_role(role);
  auto [il_is, il_n] = role_side_counts(std::forward<A>(il_frames), role, narrative, map);
  auto [pl_is, pl_n] = role_side_counts(std::forward<B>(pl_frames), role, narrative, map);
  RoleDivergence out;
  out.n_il = il_n;
  out.n_pl = pl_n;
  out.low_support = il_n < support_floor || pl_n < support_floor;
  if (il_n > 0 && pl_n > 0) {
    out.estimate = static_cast<double>(il_is) / static_cast<double>(il_n) -
                   static_cast<double>(pl_is) / static_cast<double>(pl_n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Narrative motifs
// ---------------------------------------------------------------------------

enum class MotifKind { Convergent, Adversarial, Dependent };

inline constexpr std::array<MotifKind, 3> kAllMotifs = {MotifKind::Convergent,
                                                        MotifKind::Adversarial,
                                                        MotifKind::Dependent};

constexpr std::string_view motif_name(MotifKind kind) noexcept {
  switch (kind) {
    case MotifKind::Convergent: return "convergent";
    case MotifKind::Adversarial: return "adversarial";
    case MotifKind::Dependent: return "dependent";
  }
  return "convergent";
}

struct Motif {
  MotifKind kind = MotifKind::Convergent;
  Side subject_side = Side::IS;  // never UNK

  friend bool operator==(const Motif&, const Motif&) = default;
};

enum class MotifMatching {
  SideLevel,   // compare IS/PA sides of the slots
  ActorLevel,  // compare the actor labels themselves
};

// Motifs a frame instantiates. Only slots that are present and sided (IS or
// PA) take part:
//   convergent   subject = sender = receiver
//   adversarial  subject = sender, receiver = opponent, receiver != subject
//   dependent    subject = receiver, sender = opponent, sender != subject
// At most one motif can fire for a frame.
inline std::vector<Motif> classify_motifs(const ActantFrame& frame, const SideMap& map,
                                          MotifMatching matching = MotifMatching::SideLevel) {
  std::vector<Motif> motifs;
  auto subject = slot_side(frame.subject, map);
  if (!subject || !is_sided(*subject)) return motifs;

  // Slot identity under the chosen matching; nullopt when absent or UNK.
  auto identity = [&](const std::optional<std::string>& slot) -> std::optional<std::string> {
    auto side = slot_side(slot, map);
    if (!side || !is_sided(*side)) return std::nullopt;
    return matching == MotifMatching::SideLevel ? std::string(side_name(*side)) : *slot;
  };
  const auto s = identity(frame.subject);
  const auto sn = identity(frame.sender);
  const auto r = identity(frame.receiver);
  const auto o = identity(frame.opponent);

  if (sn && r && *s == *sn && *sn == *r) motifs.push_back({MotifKind::Convergent, *subject});
  if (sn && r && o && *s == *sn && *r == *o && *r != *s) {
    motifs.push_back({MotifKind::Adversarial, *subject});
  }
  if (sn && r && o && *s == *r && *sn == *o && *sn != *s) {
    motifs.push_back({MotifKind::Dependent, *subject});
  }
  return motifs;
}

inline bool has_motif(const ActantFrame& frame, MotifKind kind, const SideMap& map,
                      MotifMatching matching = MotifMatching::SideLevel) {
  for (const auto& m : classify_motifs(frame, map, matching)) {
    if (m.kind == kind) return true;
  }
  return false;
}

enum class MotifDenominator {
  AllFrames,       // every frame of the narrative
  CompleteFrames,  // only frames where all slots the motif needs are sided
};

inline bool motif_slots_complete(const ActantFrame& f, MotifKind kind, const SideMap& map) {
  auto sided = [&](const std::optional<std::string>& slot) {
    auto side = slot_side(slot, map);
    return side && is_sided(*side);
  };
  bool base = sided(f.subject) && sided(f.sender) && sided(f.receiver);
  return kind == MotifKind::Convergent ? base : base && sided(f.opponent);
}

struct MotifShare {
  std::int64_t motif_count = 0;
  std::int64_t denominator = 0;

  std::optional<double> share() const {
    if (denominator == 0) return std::nullopt;
    return static_cast<double>(motif_count) / static_cast<double>(denominator);
  }
};

template <FrameRange R>
MotifShare motif_share(R&& frames, const SidedNarrative& narrative, MotifKind kind,
                       const SideMap& map, MotifDenominator denominator = MotifDenominator::AllFrames,
                       MotifMatching matching = MotifMatching::SideLevel) {
  MotifShare out;
  for (auto&& item : frames) {
    const ActantFrame& f = frame_of(item);
    if (!in_narrative(f, narrative, map)) continue;
    if (denominator == MotifDenominator::CompleteFrames && !motif_slots_complete(f, kind, map)) {
      continue;
    }
    ++out.denominator;
    out.motif_count += has_motif(f, kind, map, matching);
  }
  return out;
}

struct MotifDifference {
  double estimate = 0.0;  // share_il - share_pl
  double share_il = 0.0;
  double share_pl = 0.0;
  std::int64_t n_il = 0;
  std::int64_t n_pl = 0;
  // Mean prevalence across the two groups is below the display floor.
  bool suppressed = false;
};

inline MotifDifference motif_difference_from(const MotifShare& il, const MotifShare& pl,
                                             double prevalence_floor) {
  if (!il.share() || !pl.share()) throw EmptySliceError("motif difference: empty narrative slice");
  MotifDifference out;
  out.share_il = *il.share();
  out.share_pl = *pl.share();
  out.estimate = out.share_il - out.share_pl;
  out.n_il = il.denominator;
  out.n_pl = pl.denominator;
  out.suppressed = (out.share_il + out.share_pl) / 2.0 < prevalence_floor;
  return out;
}

// Difference in motif prevalence within one narrative; positive when the
// motif is more common in the first (Israeli-leaning) group.
template <FrameRange A, FrameRange B>
MotifDifference motif_difference(A&& il_frames, B&& pl_frames, const SidedNarrative& narrative,
                                 MotifKind kind, const SideMap& map, double prevalence_floor = 0.05,
                                 MotifDenominator denominator = MotifDenominator::AllFrames,
                                 MotifMatching matching = MotifMatching::SideLevel) {
  return motif_difference_from(
      motif_share(std::forward<A>(il_frames), narrative, kind, map, denominator, matching),
      motif_share(std::forward<B>(pl_frames), narrative, kind, map, denominator, matching),
      prevalence_floor);
}

// ---------------------------------------------------------------------------
// Missing actants
// ---------------------------------------------------------------------------

struct MissingShares {
  std::array<double, 6> share{};  // indexed like kAllRoles
  std::array<std::int64_t, 6> missing{};
  std::int64_t n = 0;

  double of(ActantRole role) const { return share[static_cast<std::size_t>(role)]; }
};

template <FrameRange R>
MissingShares missing_actant_shares(R&& frames) {
  MissingShares out;
  for (auto&& item : frames) {
    const ActantFrame& f = frame_of(item);
    ++out.n;
    for (ActantRole role : kAllRoles) {
      out.missing[static_cast<std::size_t>(role)] += !f.slot(role).has_value();
    }
  }
  for (std::size_t i = 0; i < out.share.size(); ++i) {
    out.share[i] = out.n ? static_cast<double>(out.missing[i]) / static_cast<double>(out.n) : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Divergence summaries
// ---------------------------------------------------------------------------

struct DivergenceResult {
  std::string key;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  double bonferroni = 1.0;
  double fdr = 1.0;
  std::int64_t n_il = 0;
  std::int64_t n_pl = 0;
};

inline double mean_abs_divergence(const std::vector<double>& estimates) {
  if (estimates.empty()) throw EmptySliceError("mean_abs_divergence: no estimates");
  double sum = 0.0;
  for (double d : estimates) sum += std::abs(d);
  return sum / static_cast<double>(estimates.size());
}

inline double mean_abs_divergence(const std::vector<DivergenceResult>& results) {
  std::vector<double> estimates;
  for (const auto& r : results) estimates.push_back(r.estimate);
  return mean_abs_divergence(estimates);
}

// ---------------------------------------------------------------------------
// Group statistics
// ---------------------------------------------------------------------------

struct GroupStats {
  std::string group;
  std::int64_t videos = 0;
  std::int64_t segments = 0;
  std::int64_t comments = 0;
  // Shannon entropy of the comment distribution over the group's videos,
  // normalised by ln(videos); 0 when the group has a single video.
  double normalized_entropy = 0.0;
  double mean_word_count = 0.0;
  // Pearson correlation of per-video comment count and view count; only when
  // at least two videos carry view counts with non-zero variance.
  std::optional<double> comment_view_correlation;
};

inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

// One row per group, ordered by group id.
inline std::vector<GroupStats> group_stats(const Corpus& corpus) {
  struct VideoTally {
    std::int64_t comments = 0;
    std::optional<std::int64_t> views;
  };
  struct Tally {
    std::map<std::string, VideoTally> videos;
    std::int64_t segments = 0;
    std::int64_t comments = 0;
    std::int64_t comment_words = 0;
  };
  std::map<std::string, Tally> tallies;
  for (const auto& doc : corpus) {
    auto& t = tallies[doc.group];
    auto& v = t.videos[doc.video_id];
    if (!v.views && doc.view_count) v.views = doc.view_count;
    if (doc.kind == DocumentKind::Comment) {
      ++t.comments;
      ++v.comments;
      t.comment_words += doc.word_count;
    } else {
      ++t.segments;
    }
  }
  std::vector<GroupStats> out;
  for (const auto& [group, t] : tallies) {
    GroupStats s;
    s.group = group;
    s.videos = static_cast<std::int64_t>(t.videos.size());
    s.segments = t.segments;
    s.comments = t.comments;
    if (t.comments > 0) {
      s.mean_word_count = static_cast<double>(t.comment_words) / static_cast<double>(t.comments);
    }
    if (s.videos > 1 && t.comments > 0) {
      double h = 0.0;
      for (const auto& [id, v] : t.videos) {
        if (v.comments == 0) continue;
        const double p = static_cast<double>(v.comments) / static_cast<double>(t.comments);
        h -= p * std::log(p);
      }
      s.normalized_entropy = h / std::log(static_cast<double>(s.videos));
    }
    std::vector<double> counts, views;
    for (const auto& [id, v] : t.videos) {
      if (!v.views) continue;
      counts.push_back(static_cast<double>(v.comments));
      views.push_back(static_cast<double>(*v.views));
    }
    s.comment_view_correlation = pearson(counts, views);
    out.push_back(s);
  }
  return out;
}

}  // namespace narrapol
