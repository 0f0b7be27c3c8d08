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

// Synthetic annotated corpora with planted side-level parameters, plus the
// closed-form values every estimator should converge to.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "narrapol/corpus.hpp"
#include "narrapol/error.hpp"
#include "narrapol/hash.hpp"
#include "narrapol/metrics.hpp"
#include "narrapol/model.hpp"

namespace narrapol {

// Probabilities over IS, PA, UNK.
using SideProbs = std::array<double, 3>;

inline constexpr SideProbs kUniformSides = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

struct MotifPropensity {
  Side subject_side = Side::IS;
  std::string object;
  double convergent = 0.0;
  double adversarial = 0.0;
  double dependent = 0.0;

  double of(MotifKind kind) const noexcept {
    switch (kind) {
      case MotifKind::Convergent: return convergent;
      case MotifKind::Adversarial: return adversarial;
      case MotifKind::Dependent: return dependent;
    }
    return 0.0;
  }
  double total() const noexcept { return convergent + adversarial + dependent; }
};

// One group/kind slice of the synthetic corpus.
struct GroupSpec {
  std::string group;
  DocumentKind kind = DocumentKind::Comment;
  std::int64_t n_documents = 1;
  std::int64_t n_videos = 1;
  double meta_subject_share = 0.0;
  std::map<std::string, double> object_marginals;
  // Per-object subject sides; objects not listed use `default_subject_sides`.
  std::map<std::string, SideProbs> subject_sides;
  SideProbs default_subject_sides = kUniformSides;
  // Sender, receiver, helper and opponent sides outside a planted motif.
  std::map<ActantRole, SideProbs> role_sides;
  std::vector<MotifPropensity> motifs;
  std::array<double, 6> missingness{};

  const SideProbs& subject_probs(std::string_view object) const {
    auto it = subject_sides.find(std::string(object));
    return it == subject_sides.end() ? default_subject_sides : it->second;
  }
  const SideProbs& role_probs(ActantRole role) const {
    auto it = role_sides.find(role);
    return it == role_sides.end() ? kUniformSides : it->second;
  }
  double missing_rate(ActantRole role) const noexcept {
    return missingness[static_cast<std::size_t>(role)];
  }
  const MotifPropensity* motif_for(const SidedNarrative& narrative) const {
    for (const auto& m : motifs) {
      if (m.subject_side == narrative.subject_side && m.object == narrative.object) return &m;
    }
    return nullptr;
  }
  double object_probability(std::string_view object) const {
    auto it = object_marginals.find(std::string(object));
    return it == object_marginals.end() ? 0.0 : it->second;
  }
};

struct SynthParams {
  std::uint64_t seed = 0;
  std::vector<GroupSpec> groups;

  void validate() const;
  const GroupSpec& find(std::string_view group, DocumentKind kind) const;
  static SynthParams from_json(const json& j);
  json to_json() const;
};

namespace detail {

inline void check_distribution(const SideProbs& p, const std::string& what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(what + ": probabilities must lie in [0, 1]");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError(what + ": probabilities must sum to 1");
}

inline SideProbs side_probs_from_json(const json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected an object of side probabilities");
  SideProbs p{};
  for (const auto& [key, value] : j.items()) {
    auto side = parse_side(key);
    if (!side || !value.is_number()) throw ConfigError(what + ": bad side entry '" + key + "'");
    p[static_cast<std::size_t>(*side)] = value.get<double>();
  }
  check_distribution(p, what);
  return p;
}

inline json side_probs_to_json(const SideProbs& p) {
  return json{{"IS", p[0]}, {"PA", p[1]}, {"UNK", p[2]}};
}

template <typename T>
T take(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("synth params: bad value for '") + key + "'");
  }
}

}  // namespace detail

inline void SynthParams::validate() const {
  if (groups.empty()) throw ConfigError("synth params: no groups");
  std::map<std::pair<std::string, DocumentKind>, int> seen;
  for (const auto& g : groups) {
    const std::string where = "synth group '" + g.group + "'";
    if (g.group.empty()) throw ConfigError("synth params: group name is empty");
    if (seen[{g.group, g.kind}]++) throw ConfigError(where + ": duplicated for one kind");
    if (g.n_documents < 1 || g.n_videos < 1) throw ConfigError(where + ": sizes must be >= 1");
    if (!(g.meta_subject_share >= 0.0 && g.meta_subject_share <= 1.0)) {
      throw ConfigError(where + ": meta_subject_share outside [0, 1]");
    }
    if (g.object_marginals.empty()) throw ConfigError(where + ": object_marginals is empty");
    double total = 0.0;
    for (const auto& [object, p] : g.object_marginals) {
      if (!is_object_label(object)) throw ConfigError(where + ": unknown object '" + object + "'");
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(where + ": object probability outside [0, 1]");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError(where + ": object_marginals must sum to 1");
    detail::check_distribution(g.default_subject_sides, where + " default subject sides");
    for (const auto& [object, p] : g.subject_sides) {
      if (!is_object_label(object)) throw ConfigError(where + ": unknown object '" + object + "'");
      detail::check_distribution(p, where + " subject sides");
    }
    for (const auto& [role, p] : g.role_sides) {
      if (role == ActantRole::Subject || role == ActantRole::Object) {
        throw ConfigError(where + ": role_sides covers sender, receiver, helper and opponent");
      }
      detail::check_distribution(p, where + " role sides");
    }
    for (const auto& m : g.motifs) {
      if (!is_sided(m.subject_side) || !is_object_label(m.object)) {
        throw ConfigError(where + ": motif narrative needs an IS/PA subject and a known object");
      }
      if (m.convergent < 0 || m.adversarial < 0 || m.dependent < 0 || m.total() > 1.0 + 1e-12) {
        throw ConfigError(where + ": motif propensities must be non-negative and sum to <= 1");
      }
    }
    for (double m : g.missingness) {
      if (!(m >= 0.0 && m <= 1.0)) throw ConfigError(where + ": missingness outside [0, 1]");
    }
  }
}

inline const GroupSpec& SynthParams::find(std::string_view group, DocumentKind kind) const {
  for (const auto& g : groups) {
    if (g.group == group && g.kind == kind) return g;
  }
  throw ConfigError("synth params: no " + std::string(kind_name(kind)) + " group '" +
                    std::string(group) + "'");
}

inline SynthParams SynthParams::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("synth params: expected a JSON object");
  SynthParams params;
  params.seed = detail::take<std::uint64_t>(j, "seed", 0);
  auto groups = j.find("groups");
  if (groups == j.end() || !groups->is_array()) throw ConfigError("synth params: 'groups' array missing");
  for (const auto& gj : *groups) {
    if (!gj.is_object()) throw ConfigError("synth params: group entries must be objects");
    GroupSpec g;
    g.group = detail::take<std::string>(gj, "group", "");
    auto kind = parse_kind(detail::take<std::string>(gj, "kind", "comment"));
    if (!kind) throw ConfigError("synth group '" + g.group + "': bad kind");
    g.kind = *kind;
    g.n_documents = detail::take<std::int64_t>(gj, "n_documents", 1);
    g.n_videos = detail::take<std::int64_t>(gj, "n_videos", 1);
    g.meta_subject_share = detail::take<double>(gj, "meta_subject_share", 0.0);
    g.object_marginals = detail::take<std::map<std::string, double>>(gj, "object_marginals", {});
    if (auto it = gj.find("subject_sides"); it != gj.end()) {
      if (!it->is_object()) throw ConfigError("synth group '" + g.group + "': bad subject_sides");
      for (const auto& [key, value] : it->items()) {
        auto p = detail::side_probs_from_json(value, "subject_sides." + key);
        if (key == "default") {
          g.default_subject_sides = p;
        } else {
          g.subject_sides[key] = p;
        }
      }
    }
    if (auto it = gj.find("role_sides"); it != gj.end()) {
      if (!it->is_object()) throw ConfigError("synth group '" + g.group + "': bad role_sides");
      for (const auto& [key, value] : it->items()) {
        auto role = parse_role(key);
        if (!role) throw ConfigError("synth group '" + g.group + "': unknown role '" + key + "'");
        g.role_sides[*role] = detail::side_probs_from_json(value, "role_sides." + key);
      }
    }
    if (auto it = gj.find("motifs"); it != gj.end()) {
      if (!it->is_array()) throw ConfigError("synth group '" + g.group + "': motifs must be an array");
      for (const auto& mj : *it) {
        MotifPropensity m;
        auto side = parse_side(detail::take<std::string>(mj, "subject_side", ""));
        if (!side) throw ConfigError("synth group '" + g.group + "': bad motif subject_side");
        m.subject_side = *side;
        m.object = detail::take<std::string>(mj, "object", "");
        m.convergent = detail::take<double>(mj, "convergent", 0.0);
        m.adversarial = detail::take<double>(mj, "adversarial", 0.0);
        m.dependent = detail::take<double>(mj, "dependent", 0.0);
        g.motifs.push_back(std::move(m));
      }
    }
    if (auto it = gj.find("missingness"); it != gj.end()) {
      if (!it->is_object()) throw ConfigError("synth group '" + g.group + "': bad missingness");
      for (const auto& [key, value] : it->items()) {
        auto role = parse_role(key);
        if (!role || !value.is_number()) {
          throw ConfigError("synth group '" + g.group + "': bad missingness entry '" + key + "'");
        }
        g.missingness[static_cast<std::size_t>(*role)] = value.get<double>();
      }
    }
    params.groups.push_back(std::move(g));
  }
  params.validate();
  return params;
}

inline json SynthParams::to_json() const {
  json groups_json = json::array();
  for (const auto& g : groups) {
    json subject = json::object();
    subject["default"] = detail::side_probs_to_json(g.default_subject_sides);
    for (const auto& [object, p] : g.subject_sides) subject[object] = detail::side_probs_to_json(p);
    json roles = json::object();
    for (const auto& [role, p] : g.role_sides) roles[std::string(role_name(role))] = detail::side_probs_to_json(p);
    json motifs = json::array();
    for (const auto& m : g.motifs) {
      motifs.push_back({{"subject_side", side_name(m.subject_side)},
                        {"object", m.object},
                        {"convergent", m.convergent},
                        {"adversarial", m.adversarial},
                        {"dependent", m.dependent}});
    }
    json missing = json::object();
    for (auto role : kAllRoles) missing[std::string(role_name(role))] = g.missing_rate(role);
    groups_json.push_back({{"group", g.group},
                           {"kind", kind_name(g.kind)},
                           {"n_documents", g.n_documents},
                           {"n_videos", g.n_videos},
                           {"meta_subject_share", g.meta_subject_share},
                           {"object_marginals", g.object_marginals},
                           {"subject_sides", subject},
                           {"role_sides", roles},
                           {"motifs", motifs},
                           {"missingness", missing}});
  }
  return json{{"seed", seed}, {"groups", groups_json}};
}

namespace detail {

inline constexpr std::uint64_t kSynthVideoStream = 0x5EED'0000'0000'0001ULL;

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Side draw_side(std::mt19937_64& rng, const SideProbs& p) {
  const double u = unit_draw(rng);
  if (u < p[0]) return Side::IS;
  if (u < p[0] + p[1]) return Side::PA;
  return Side::UNK;
}

// Actor pools per side: mapped members for IS/PA, every other non-meta
// taxonomy actor for UNK.
struct ActorPools {
  std::array<std::vector<std::string>, 3> by_side;

  explicit ActorPools(const Taxonomy& taxonomy) {
    const SideMap& map = taxonomy.side_map();
    by_side[0] = map.members(Side::IS);
    by_side[1] = map.members(Side::PA);
    for (const auto& actor : taxonomy.actors()) {
      if (actor == kAudienceActor || actor == kVideoCreatorActor) continue;
      if (map.side_of(actor) == Side::UNK) by_side[2].push_back(actor);
    }
    std::sort(by_side[2].begin(), by_side[2].end());
    for (const auto& pool : by_side) {
      if (pool.empty()) throw ConfigError("synth: taxonomy leaves a side without actors");
    }
  }

  const std::string& pick(std::mt19937_64& rng, Side side) const {
    const auto& pool = by_side[static_cast<std::size_t>(side)];
    return pool[static_cast<std::size_t>(unit_draw(rng) * static_cast<double>(pool.size()))];
  }
};

inline ActantFrame draw_frame(std::mt19937_64& rng, const GroupSpec& g, const ActorPools& pools) {
  ActantFrame f;
  // Object.
  double u = unit_draw(rng), acc = 0.0;
  const std::string* object = &g.object_marginals.rbegin()->first;
  for (const auto& [label, p] : g.object_marginals) {
    acc += p;
    if (u < acc) {
      object = &label;
      break;
    }
  }
  f.object = *object;

  auto independent = [&](ActantRole role) { return draw_side(rng, g.role_probs(role)); };
  Side sender = Side::UNK, receiver = Side::UNK, opponent = Side::UNK;

  if (unit_draw(rng) < g.meta_subject_share) {
    f.subject = std::string(unit_draw(rng) < 0.5 ? kAudienceActor : kVideoCreatorActor);
    sender = independent(ActantRole::Sender);
    receiver = independent(ActantRole::Receiver);
    opponent = independent(ActantRole::Opponent);
  } else {
    const Side s = draw_side(rng, g.subject_probs(*object));
    f.subject = pools.pick(rng, s);
    const MotifPropensity* motif = is_sided(s) ? g.motif_for({s, *object}) : nullptr;
    const double v = unit_draw(rng);
    if (motif && v < motif->convergent) {
      sender = receiver = s;
      opponent = independent(ActantRole::Opponent);
    } else if (motif && v < motif->convergent + motif->adversarial) {
      sender = s;
      receiver = opponent = opposite(s);
    } else if (motif && v < motif->total()) {
      receiver = s;
      sender = opponent = opposite(s);
    } else {
      sender = independent(ActantRole::Sender);
      receiver = independent(ActantRole::Receiver);
      opponent = independent(ActantRole::Opponent);
    }
  }
  f.sender = pools.pick(rng, sender);
  f.receiver = pools.pick(rng, receiver);
  f.opponent = pools.pick(rng, opponent);
  f.helper = pools.pick(rng, independent(ActantRole::Helper));

  for (auto role : kAllRoles) {
    if (unit_draw(rng) < g.missing_rate(role)) f.slot(role).reset();
  }
  return f;
}

}  // namespace detail

// Draws every group's documents. Each document has its own RNG substream, so
// the output depends only on the parameters.
inline Corpus generate(const SynthParams& params,
                       const Taxonomy& taxonomy = Taxonomy::paper_default()) {
  params.validate();
  const detail::ActorPools pools(taxonomy);
  Corpus corpus;
  for (std::size_t gi = 0; gi < params.groups.size(); ++gi) {
    const GroupSpec& g = params.groups[gi];
    const bool comments = g.kind == DocumentKind::Comment;
    const std::string prefix = g.group + (comments ? "-c" : "-t");

    std::vector<std::int64_t> views(static_cast<std::size_t>(g.n_videos));
    for (std::int64_t v = 0; v < g.n_videos; ++v) {
      std::mt19937_64 rng(substream_seed(params.seed, detail::kSynthVideoStream + gi,
                                         static_cast<std::uint64_t>(v)));
      views[static_cast<std::size_t>(v)] = 1000 + static_cast<std::int64_t>(rng() % 1'000'000);
    }

    for (std::int64_t i = 0; i < g.n_documents; ++i) {
      std::mt19937_64 rng(substream_seed(params.seed, gi, static_cast<std::uint64_t>(i)));
      const std::int64_t v = i % g.n_videos;
      char video[64];
      std::snprintf(video, sizeof video, "-v%04lld", static_cast<long long>(v));
      char id[64];
      std::snprintf(id, sizeof id, "-%06lld", static_cast<long long>(i));
      Document doc = make_document(prefix + id, g.kind, g.group + video, g.group,
                                   std::string("synthetic ") + (comments ? "comment " : "segment ") +
                                       std::to_string(i));
      doc.view_count = views[static_cast<std::size_t>(v)];
      doc.frame = detail::draw_frame(rng, g, pools);
      doc.provenance = Provenance{"synth", ""};
      corpus.push_back(std::move(doc));
    }
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Closed-form expectations
// ---------------------------------------------------------------------------

// Within-group subject term for one object: p(IS | sided) in reduced mode,
// p(IS) - p(PA) over all subjects in full mode. Masking is independent of
// content and cancels.
inline std::optional<double> expected_subject_term(const GroupSpec& g, std::string_view object,
                                                   DivergenceMode mode) {
  if (g.object_probability(object) <= 0.0) return std::nullopt;
  const SideProbs& p = g.subject_probs(object);
  const double sided = 1.0 - g.meta_subject_share;
  if (mode == DivergenceMode::Reduced) {
    if (sided <= 0.0 || p[0] + p[1] <= 0.0) return std::nullopt;
    return p[0] / (p[0] + p[1]);
  }
  return sided * (p[0] - p[1]);
}

namespace detail {

// Branch of the role-side draw inside one narrative, with its probability and
// the side distribution of sender, receiver and opponent.
struct RoleBranch {
  double weight;
  SideProbs sender, receiver, opponent;
};

inline SideProbs point_mass(Side side) {
  SideProbs p{};
  p[static_cast<std::size_t>(side)] = 1.0;
  return p;
}

inline std::vector<RoleBranch> role_branches(const GroupSpec& g, const SidedNarrative& n) {
  const SideProbs sn = g.role_probs(ActantRole::Sender);
  const SideProbs r = g.role_probs(ActantRole::Receiver);
  const SideProbs o = g.role_probs(ActantRole::Opponent);
  const MotifPropensity* m = g.motif_for(n);
  if (!m) return {{1.0, sn, r, o}};
  const SideProbs self = point_mass(n.subject_side), other = point_mass(opposite(n.subject_side));
  return {{m->convergent, self, self, o},
          {m->adversarial, self, other, other},
          {m->dependent, other, self, other},
          {1.0 - m->total(), sn, r, o}};
}

inline bool motif_pattern(MotifKind kind, Side s, Side sn, Side r, Side o) {
  if (!is_sided(sn) || !is_sided(r)) return false;
  switch (kind) {
    case MotifKind::Convergent: return sn == s && r == s;
    case MotifKind::Adversarial: return is_sided(o) && sn == s && r == o && r != s;
    case MotifKind::Dependent: return is_sided(o) && r == s && sn == o && sn != s;
  }
  return false;
}

}  // namespace detail

// P(motif | narrative) with every frame of the narrative in the denominator.
// nullopt when the group never produces the narrative.
inline std::optional<double> expected_motif_share(const GroupSpec& g, const SidedNarrative& n,
                                                  MotifKind kind) {
  if (!is_sided(n.subject_side) || g.object_probability(n.object) <= 0.0 ||
      g.meta_subject_share >= 1.0 ||
      g.subject_probs(n.object)[static_cast<std::size_t>(n.subject_side)] <= 0.0) {
    return std::nullopt;
  }
  double pattern = 0.0;
  for (const auto& b : detail::role_branches(g, n)) {
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t d = 0; d < 3; ++d) {
          const double w = b.weight * b.sender[a] * b.receiver[c] * b.opponent[d];
          if (w > 0.0 && detail::motif_pattern(kind, n.subject_side, static_cast<Side>(a),
                                               static_cast<Side>(c), static_cast<Side>(d))) {
            pattern += w;
          }
        }
      }
    }
  }
  double survive = (1.0 - g.missing_rate(ActantRole::Sender)) *
                   (1.0 - g.missing_rate(ActantRole::Receiver));
  if (kind != MotifKind::Convergent) survive *= 1.0 - g.missing_rate(ActantRole::Opponent);
  return pattern * survive;
}

// P(role = IS | narrative, role sided).
inline std::optional<double> expected_role_share(const GroupSpec& g, const SidedNarrative& n,
                                                 ActantRole role) {
  require_divergence_role(role);
  if (!expected_motif_share(g, n, MotifKind::Convergent)) return std::nullopt;
  if (g.missing_rate(role) >= 1.0) return std::nullopt;
  double is = 0.0, sided = 0.0;
  for (const auto& b : detail::role_branches(g, n)) {
    const SideProbs& p = role == ActantRole::Sender     ? b.sender
                         : role == ActantRole::Receiver ? b.receiver
                                                        : b.opponent;
    is += b.weight * p[0];
    sided += b.weight * (p[0] + p[1]);
  }
  if (sided <= 0.0) return std::nullopt;
  return is / sided;
}

struct ExpectedMotif {
  SidedNarrative narrative;
  MotifKind kind = MotifKind::Convergent;
  double share_il = 0.0;
  double share_pl = 0.0;
  double difference = 0.0;
};

struct ExpectedRole {
  SidedNarrative narrative;
  ActantRole role = ActantRole::Sender;
  double share_il = 0.0;
  double share_pl = 0.0;
  double difference = 0.0;
};

struct ExpectedDivergence {
  std::map<std::string, double> reduced;  // per object
  std::map<std::string, double> full;
  std::vector<ExpectedMotif> motifs;
  std::vector<ExpectedRole> roles;
};

// Analytic values for an Israeli-leaning / Palestinian-leaning pair of slices.
// Only keys defined in both groups are reported.
inline ExpectedDivergence expected_divergence(const GroupSpec& il, const GroupSpec& pl) {
  ExpectedDivergence out;
  for (auto label : kObjectLabels) {
    const std::string object(label);
    auto a = expected_subject_term(il, object, DivergenceMode::Reduced);
    auto b = expected_subject_term(pl, object, DivergenceMode::Reduced);
    if (a && b) out.reduced[object] = *a - *b;
    a = expected_subject_term(il, object, DivergenceMode::Full);
    b = expected_subject_term(pl, object, DivergenceMode::Full);
    if (a && b) out.full[object] = (*a - *b) / 2.0;

    for (Side side : {Side::IS, Side::PA}) {
      const SidedNarrative n{side, object};
      for (MotifKind kind : kAllMotifs) {
        auto x = expected_motif_share(il, n, kind);
        auto y = expected_motif_share(pl, n, kind);
        if (x && y) out.motifs.push_back({n, kind, *x, *y, *x - *y});
      }
      for (ActantRole role : {ActantRole::Sender, ActantRole::Receiver, ActantRole::Opponent}) {
        auto x = expected_role_share(il, n, role);
        auto y = expected_role_share(pl, n, role);
        if (x && y) out.roles.push_back({n, role, *x, *y, *x - *y});
      }
    }
  }
  return out;
}

inline ExpectedDivergence expected_divergence(const SynthParams& params, DocumentKind kind,
                                              std::string_view il_group, std::string_view pl_group) {
  return expected_divergence(params.find(il_group, kind), params.find(pl_group, kind));
}

inline json expected_to_json(const ExpectedDivergence& e) {
  json motifs = json::array(), roles = json::array();
  for (const auto& m : e.motifs) {
    motifs.push_back({{"subject_side", side_name(m.narrative.subject_side)},
                      {"object", m.narrative.object},
                      {"motif", motif_name(m.kind)},
                      {"share_IL", m.share_il},
                      {"share_PL", m.share_pl},
                      {"difference", m.difference}});
  }
  for (const auto& r : e.roles) {
    roles.push_back({{"subject_side", side_name(r.narrative.subject_side)},
                     {"object", r.narrative.object},
                     {"role", role_name(r.role)},
                     {"share_IL", r.share_il},
                     {"share_PL", r.share_pl},
                     {"difference", r.difference}});
  }
  return {{"reduced", e.reduced}, {"full", e.full}, {"motifs", motifs}, {"roles", roles}};
}

}  // namespace narrapol
