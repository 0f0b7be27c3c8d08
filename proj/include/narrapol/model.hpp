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

// Core domain types: actantial roles and frames, actor sides, the label
// taxonomy and its canonicalisation rules.

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "narrapol/error.hpp"

namespace narrapol {

using json = nlohmann::json;

enum class ActantRole { Subject, Object, Sender, Receiver, Helper, Opponent };

inline constexpr std::array<ActantRole, 6> kAllRoles = {
    ActantRole::Subject, ActantRole::Object,  ActantRole::Sender,
    ActantRole::Receiver, ActantRole::Helper, ActantRole::Opponent};

// Roles whose slot holds an actor (everything except Object).
inline constexpr std::array<ActantRole, 5> kActorRoles = {
    ActantRole::Subject, ActantRole::Sender, ActantRole::Receiver,
    ActantRole::Helper, ActantRole::Opponent};

constexpr std::string_view role_name(ActantRole role) noexcept {
  switch (role) {
    case ActantRole::Subject: return "subject";
    case ActantRole::Object: return "object";
    case ActantRole::Sender: return "sender";
    case ActantRole::Receiver: return "receiver";
    case ActantRole::Helper: return "helper";
    case ActantRole::Opponent: return "opponent";
  }
  return "subject";
}

inline std::optional<ActantRole> parse_role(std::string_view name) {
  for (ActantRole role : kAllRoles) {
    if (role_name(role) == name) return role;
  }
  return std::nullopt;
}

enum class Side { IS, PA, UNK };

constexpr std::string_view side_name(Side side) noexcept {
  switch (side) {
    case Side::IS: return "IS";
    case Side::PA: return "PA";
    case Side::UNK: return "UNK";
  }
  return "UNK";
}

inline std::optional<Side> parse_side(std::string_view name) {
  if (name == "IS") return Side::IS;
  if (name == "PA") return Side::PA;
  if (name == "UNK") return Side::UNK;
  return std::nullopt;
}

constexpr bool is_sided(Side side) noexcept { return side != Side::UNK; }

constexpr Side opposite(Side side) noexcept {
  return side == Side::IS ? Side::PA : side == Side::PA ? Side::IS : Side::UNK;
}

// The closed object label set.
inline constexpr std::array<std::string_view, 7> kObjectLabels = {
    "rights/freedoms", "violence", "peace",          "information",
    "territory",       "power",    "security/safety"};

inline constexpr std::string_view kUnknownActor = "unknown";
inline constexpr std::string_view kAudienceActor = "audience/commenter";
inline constexpr std::string_view kVideoCreatorActor = "video creator";

inline bool is_object_label(std::string_view token) {
  return std::find(kObjectLabels.begin(), kObjectLabels.end(), token) !=
         kObjectLabels.end();
}

inline std::size_t object_index(std::string_view token) {
  auto it = std::find(kObjectLabels.begin(), kObjectLabels.end(), token);
  if (it == kObjectLabels.end()) {
    throw DataContractError("not an object label: '" + std::string(token) + "'");
  }
  return static_cast<std::size_t>(it - kObjectLabels.begin());
}

// One document's actantial annotation. Any slot may be absent.
struct ActantFrame {
  std::optional<std::string> subject;
  std::optional<std::string> object;
  std::optional<std::string> sender;
  std::optional<std::string> receiver;
  std::optional<std::string> helper;
  std::optional<std::string> opponent;

  const std::optional<std::string>& slot(ActantRole role) const noexcept {
    switch (role) {
      case ActantRole::Subject: return subject;
      case ActantRole::Object: return object;
      case ActantRole::Sender: return sender;
      case ActantRole::Receiver: return receiver;
      case ActantRole::Helper: return helper;
      case ActantRole::Opponent: return opponent;
    }
    return subject;
  }

  std::optional<std::string>& slot(ActantRole role) noexcept {
    return const_cast<std::optional<std::string>&>(
        static_cast<const ActantFrame&>(*this).slot(role));
  }

  bool empty() const noexcept {
    return std::none_of(kAllRoles.begin(), kAllRoles.end(),
                        [this](ActantRole r) { return slot(r).has_value(); });
  }

  friend bool operator==(const ActantFrame&, const ActantFrame&) = default;
};

inline json frame_to_json(const ActantFrame& frame) {
  json j = json::object();
  for (ActantRole role : kAllRoles) {
    const auto& value = frame.slot(role);
    j[std::string(role_name(role))] = value ? json(*value) : json(nullptr);
  }
  return j;
}

inline ActantFrame frame_from_json(const json& j) {
  if (!j.is_object()) throw DataContractError("frame must be a JSON object");
  ActantFrame frame;
  for (const auto& [key, value] : j.items()) {
    auto role = parse_role(key);
    if (!role) throw DataContractError("frame has unknown role key '" + key + "'");
    if (value.is_null()) continue;
    if (!value.is_string()) {
      throw DataContractError("frame role '" + key + "' must be a string or null");
    }
    frame.slot(*role) = value.get<std::string>();
  }
  return frame;
}

// True iff the subject addresses the video or its audience rather than the
// conflict.
inline bool is_meta_subject(const ActantFrame& frame) {
  return frame.subject &&
         (*frame.subject == kAudienceActor || *frame.subject == kVideoCreatorActor);
}

// Assignment of canonical actor labels to conflict sides. Total: anything not
// mapped is UNK.
class SideMap {
 public:
  SideMap() = default;

  void assign(std::string actor, Side side) { sides_[std::move(actor)] = side; }

  Side side_of(std::string_view actor) const {
    auto it = sides_.find(actor);
    return it == sides_.end() ? Side::UNK : it->second;
  }

  bool contains(std::string_view actor) const { return sides_.find(actor) != sides_.end(); }

  // Sorted members of one side.
  std::vector<std::string> members(Side side) const {
    std::vector<std::string> out;
    for (const auto& [actor, s] : sides_) {
      if (s == side) out.push_back(actor);
    }
    return out;
  }

  // Copy with both actors moved to UNK. Dropping an already-dropped pair is a
  // no-op; actors the map has never heard of are an error.
  SideMap without_pair(std::string_view first, std::string_view second) const {
    for (auto actor : {first, second}) {
      if (!contains(actor)) {
        throw ConfigError("actor '" + std::string(actor) + "' is not in the side map");
      }
    }
    SideMap out = *this;
    out.sides_.find(first)->second = Side::UNK;
    out.sides_.find(second)->second = Side::UNK;
    return out;
  }

  const std::map<std::string, Side, std::less<>>& assignments() const noexcept {
    return sides_;
  }

  json to_json() const {
    json j = json::object();
    for (const auto& [actor, side] : sides_) j[actor] = std::string(side_name(side));
    return j;
  }

  friend bool operator==(const SideMap&, const SideMap&) = default;

 private:
  std::map<std::string, Side, std::less<>> sides_;
};

inline Side side_of(std::string_view actor, const SideMap& map) { return map.side_of(actor); }

// Side of an optional slot; absent slots have no side.
inline std::optional<Side> slot_side(const std::optional<std::string>& slot,
                                     const SideMap& map) {
  if (!slot) return std::nullopt;
  return map.side_of(*slot);
}

// Trim, ASCII lowercase and collapse inner whitespace runs.
inline std::string fold_label(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

enum class LabelKind { Actor, Object, Unknown };

// A raw label that could not be mapped; kept verbatim for taxonomy iteration.
struct LabelMiss {
  std::string raw;
  std::string folded;
  std::string role;  // empty when the lookup was role-agnostic

  friend bool operator==(const LabelMiss&, const LabelMiss&) = default;
};

struct CanonicalLabel {
  std::string token;
  LabelKind kind = LabelKind::Unknown;
  std::optional<LabelMiss> miss;
};

class Taxonomy {
 public:
  Taxonomy() = default;

  static Taxonomy from_json(const json& j);
  static Taxonomy paper_default();

  json to_json() const;

  const std::vector<std::string>& actors() const noexcept { return actors_; }
  const std::vector<std::string>& objects() const noexcept { return objects_; }
  const std::map<std::string, std::string>& aliases() const noexcept { return aliases_; }
  const SideMap& side_map() const noexcept { return side_map_; }
  void set_side_map(SideMap map) { side_map_ = std::move(map); }

  bool is_actor(std::string_view token) const {
    return std::find(actors_.begin(), actors_.end(), token) != actors_.end();
  }
  bool is_object(std::string_view token) const {
    return std::find(objects_.begin(), objects_.end(), token) != objects_.end();
  }

  // Case-fold, trim, then exact or alias lookup. Never throws; misses come
  // back as the reserved "unknown" token with a miss record.
  CanonicalLabel canonicalize(std::string_view raw) const {
    std::string folded = fold_label(raw);
    if (folded == kUnknownActor) return {std::string(kUnknownActor), LabelKind::Unknown, {}};
    std::string target = folded;
    if (auto it = aliases_.find(folded); it != aliases_.end()) target = it->second;
    if (is_actor(target)) return {target, LabelKind::Actor, {}};
    if (is_object(target)) return {target, LabelKind::Object, {}};
    return {std::string(kUnknownActor), LabelKind::Unknown,
            LabelMiss{std::string(raw), std::move(folded), {}}};
  }

  // Throws DataContractError when a populated slot is not a taxonomy label.
  void validate(const ActantFrame& frame) const {
    for (ActantRole role : kActorRoles) {
      const auto& value = frame.slot(role);
      if (value && *value != kUnknownActor && !is_actor(*value)) {
        throw DataContractError("frame " + std::string(role_name(role)) + " '" + *value +
                                "' is not a taxonomy actor");
      }
    }
    if (frame.object && !is_object(*frame.object)) {
      throw DataContractError("frame object '" + *frame.object + "' is not a taxonomy object");
    }
  }

 private:
  std::vector<std::string> actors_;
  std::vector<std::string> objects_;
  std::map<std::string, std::string> aliases_;  // folded alias -> canonical token
  SideMap side_map_;
};

inline Taxonomy Taxonomy::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("taxonomy: expected a JSON object");
  for (const char* key : {"actors", "objects"}) {
    if (!j.contains(key) || !j.at(key).is_array()) {
      throw ConfigError(std::string("taxonomy: '") + key + "' must be an array");
    }
  }
  Taxonomy tax;
  std::set<std::string> seen;
  for (const auto& a : j.at("actors")) {
    if (!a.is_string()) throw ConfigError("taxonomy: actor labels must be strings");
    std::string folded = fold_label(a.get<std::string>());
    if (folded.empty()) throw ConfigError("taxonomy: empty actor label");
    if (folded == kUnknownActor) throw ConfigError("taxonomy: 'unknown' is reserved");
    if (is_object_label(folded)) {
      throw ConfigError("taxonomy: actor '" + folded + "' collides with an object label");
    }
    if (!seen.insert(folded).second) {
      throw ConfigError("taxonomy: duplicate actor '" + folded + "'");
    }
    tax.actors_.push_back(folded);
  }
  for (const auto& o : j.at("objects")) {
    if (!o.is_string()) throw ConfigError("taxonomy: object labels must be strings");
    std::string folded = fold_label(o.get<std::string>());
    if (!is_object_label(folded)) {
      throw ConfigError("taxonomy: '" + folded + "' is not one of the seven object labels");
    }
    if (!seen.insert(folded).second) {
      throw ConfigError("taxonomy: duplicate object '" + folded + "'");
    }
    tax.objects_.push_back(folded);
  }
  if (j.contains("aliases")) {
    const auto& aliases = j.at("aliases");
    if (!aliases.is_object()) throw ConfigError("taxonomy: 'aliases' must be an object");
    for (const auto& [raw, target] : aliases.items()) {
      if (!target.is_string()) throw ConfigError("taxonomy: alias targets must be strings");
      std::string folded = fold_label(raw);
      std::string canonical = fold_label(target.get<std::string>());
      if (!tax.is_actor(canonical) && !tax.is_object(canonical)) {
        throw ConfigError("taxonomy: alias '" + raw + "' targets unknown label '" +
                          canonical + "'");
      }
      auto [it, inserted] = tax.aliases_.emplace(folded, canonical);
      if (!inserted && it->second != canonical) {
        throw ConfigError("taxonomy: alias '" + folded + "' maps to both '" + it->second +
                          "' and '" + canonical + "'");
      }
    }
  }
  for (const auto& actor : tax.actors_) tax.side_map_.assign(actor, Side::UNK);
  if (j.contains("side_map")) {
    const auto& sides = j.at("side_map");
    if (!sides.is_object()) throw ConfigError("taxonomy: 'side_map' must be an object");
    for (const auto& [actor, side] : sides.items()) {
      std::string folded = fold_label(actor);
      if (!tax.is_actor(folded)) {
        throw ConfigError("taxonomy: side_map names unknown actor '" + actor + "'");
      }
      auto parsed = side.is_string() ? parse_side(side.get<std::string>()) : std::nullopt;
      if (!parsed) throw ConfigError("taxonomy: side for '" + actor + "' must be IS, PA or UNK");
      tax.side_map_.assign(folded, *parsed);
    }
  }
  return tax;
}

inline json Taxonomy::to_json() const {
  json j;
  j["actors"] = actors_;
  j["objects"] = objects_;
  j["aliases"] = aliases_;
  j["side_map"] = side_map_.to_json();
  return j;
}

// Actor and object labels named in the source study, with the aliases the
// annotation pass needs and the eight side-assigned conflict actors.
inline constexpr std::string_view kDefaultTaxonomyJson = R"json({
  "actors": [
    "israel/israelis", "palestine/palestinians", "jews", "zionists", "idf",
    "hamas", "arabs", "muslims", "extremists", "god/allah", "the world", "us",
    "iran", "un", "both sides", "audience/commenter", "video creator"
  ],
  "objects": [
    "rights/freedoms", "violence", "peace", "information", "territory", "power",
    "security/safety"
  ],
  "aliases": {
    "israel": "israel/israelis",
    "israelis": "israel/israelis",
    "israeli": "israel/israelis",
    "the israelis": "israel/israelis",
    "israeli government": "israel/israelis",
    "the state of israel": "israel/israelis",
    "palestine": "palestine/palestinians",
    "palestinians": "palestine/palestinians",
    "palestinian": "palestine/palestinians",
    "the palestinians": "palestine/palestinians",
    "gazans": "palestine/palestinians",
    "jew": "jews",
    "jewish people": "jews",
    "the jews": "jews",
    "zionist": "zionists",
    "the zionists": "zionists",
    "the idf": "idf",
    "israel defense forces": "idf",
    "israeli army": "idf",
    "israeli military": "idf",
    "arab": "arabs",
    "the arabs": "arabs",
    "muslim": "muslims",
    "the muslims": "muslims",
    "extremist": "extremists",
    "god": "god/allah",
    "allah": "god/allah",
    "world": "the world",
    "the international community": "the world",
    "united states": "us",
    "the us": "us",
    "usa": "us",
    "u.s.": "us",
    "america": "us",
    "united nations": "un",
    "the un": "un",
    "iranian government": "iran",
    "both": "both sides",
    "audience": "audience/commenter",
    "commenter": "audience/commenter",
    "commenter/audience": "audience/commenter",
    "the audience": "audience/commenter",
    "viewers": "audience/commenter",
    "creator": "video creator",
    "the video creator": "video creator",
    "narrator": "video creator",
    "rights": "rights/freedoms",
    "freedom": "rights/freedoms",
    "freedoms": "rights/freedoms",
    "human rights": "rights/freedoms",
    "land": "territory",
    "security": "security/safety",
    "safety": "security/safety"
  },
  "side_map": {
    "idf": "IS", "israel/israelis": "IS", "jews": "IS", "zionists": "IS",
    "arabs": "PA", "hamas": "PA", "muslims": "PA", "palestine/palestinians": "PA"
  }
})json";

inline Taxonomy Taxonomy::paper_default() {
  return from_json(json::parse(kDefaultTaxonomyJson));
}

}  // namespace narrapol
