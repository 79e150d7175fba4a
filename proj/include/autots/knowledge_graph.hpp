/*
 * Copyright 2026 The autots Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Typed knowledge graph over module options.
//
// Entity kinds: source algorithm (Alg), slot (Mod), hyperparameter name
// (Hyp), hyperparameter setting (Set) and option (Opt). Relations, stored
// with the more specific entity as head:
//
//   R1  Opt -> Alg   architecture source of the option
//   R2  Opt -> Set   one per hyperparameter of the option's solution
//   R3  Opt -> Mod   slot the option belongs to
//   R4  Set -> Hyp   hyperparameter a setting assigns
//   R5  Hyp -> Alg   algorithm a hyperparameter belongs to
//
// Hyp entities are namespaced by algorithm, so a hyperparameter shared by
// several solutions of the same source algorithm is one entity and equal
// settings are one Set entity.

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "autots/search_space.hpp"

namespace autots {

enum class EntityKind : std::uint8_t { Alg, Mod, Hyp, Set, Opt };
enum class Relation : std::uint8_t { R1, R2, R3, R4, R5 };

inline constexpr std::size_t kEntityKindCount = 5;
inline constexpr std::size_t kRelationCount = 5;

constexpr std::string_view entity_kind_name(EntityKind k) noexcept {
  constexpr std::array<std::string_view, kEntityKindCount> names = {"Alg", "Mod", "Hyp", "Set",
                                                                    "Opt"};
  return names[static_cast<std::size_t>(k)];
}

constexpr std::string_view relation_name(Relation r) noexcept {
  constexpr std::array<std::string_view, kRelationCount> names = {"R1", "R2", "R3", "R4", "R5"};
  return names[static_cast<std::size_t>(r)];
}

/// (head kind, tail kind) each relation admits.
constexpr std::pair<EntityKind, EntityKind> relation_signature(Relation r) noexcept {
  switch (r) {
    case Relation::R1: return {EntityKind::Opt, EntityKind::Alg};
    case Relation::R2: return {EntityKind::Opt, EntityKind::Set};
    case Relation::R3: return {EntityKind::Opt, EntityKind::Mod};
    case Relation::R4: return {EntityKind::Set, EntityKind::Hyp};
    case Relation::R5: return {EntityKind::Hyp, EntityKind::Alg};
  }
  return {EntityKind::Opt, EntityKind::Alg};
}

using EntityId = std::uint32_t;

struct Entity {
  EntityKind kind{};
  std::string key;  // "T5", "T5/node dim", "T5/node dim=20", "FExM_add", "1234"
  EntityId id = 0;

  std::string qualified_key() const { return std::string(entity_kind_name(kind)) + ":" + key; }
};

struct Triplet {
  EntityId head = 0;
  Relation relation{};
  EntityId tail = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct TripletHash {
  std::size_t operator()(const Triplet& t) const noexcept {
    return static_cast<std::size_t>(
        splitmix64((std::uint64_t{t.head} << 32) ^ (std::uint64_t{t.tail} << 3) ^
                   static_cast<std::uint64_t>(t.relation)));
  }
};

struct KgStats {
  std::array<std::size_t, kEntityKindCount> entities{};
  std::array<std::size_t, kRelationCount> triplets{};

  std::size_t entity_count(EntityKind k) const { return entities[static_cast<std::size_t>(k)]; }
  std::size_t triplet_count(Relation r) const { return triplets[static_cast<std::size_t>(r)]; }
};

class KnowledgeGraph {
 public:
  const std::vector<Entity>& entities() const noexcept { return entities_; }
  const std::vector<Triplet>& triplets() const noexcept { return triplets_; }
  const Entity& entity(EntityId id) const { return entities_.at(id); }

  bool contains(const Triplet& t) const { return triplet_set_.count(t) != 0; }

  std::optional<EntityId> find(EntityKind kind, const std::string& key) const {
    auto it = index_.find(std::string(entity_kind_name(kind)) + ":" + key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Entity of option `id`, if the option is part of the graph.
  std::optional<EntityId> option_entity(OptionId id) const {
    auto it = option_entity_.find(id);
    if (it == option_entity_.end()) return std::nullopt;
    return it->second;
  }

  /// Entity ids of one kind, in creation order.
  std::span<const EntityId> entities_of(EntityKind k) const {
    return by_kind_[static_cast<std::size_t>(k)];
  }

  KgStats stats() const {
    KgStats s;
    for (const auto& e : entities_) ++s.entities[static_cast<std::size_t>(e.kind)];
    for (const auto& t : triplets_) ++s.triplets[static_cast<std::size_t>(t.relation)];
    return s;
  }

  /// One triplet per line: head<TAB>relation<TAB>tail, LF endings.
  void write_tsv(std::ostream& out) const {
    for (const auto& t : triplets_)
      out << entities_[t.head].qualified_key() << '\t' << relation_name(t.relation) << '\t'
          << entities_[t.tail].qualified_key() << '\n';
  }

  std::string to_tsv() const {
    std::ostringstream out;
    write_tsv(out);
    return out.str();
  }

 private:
  friend KnowledgeGraph build_kg(const SearchSpace& space);

  EntityId intern(EntityKind kind, std::string key, bool* created = nullptr) {
    std::string q = std::string(entity_kind_name(kind)) + ":" + key;
    auto [it, inserted] = index_.try_emplace(std::move(q), static_cast<EntityId>(entities_.size()));
    if (inserted) {
      entities_.push_back({kind, std::move(key), it->second});
      by_kind_[static_cast<std::size_t>(kind)].push_back(it->second);
    }
    if (created) *created = inserted;
    return it->second;
  }

  void link(EntityId head, Relation r, EntityId tail) {
    Triplet t{head, r, tail};
    if (triplet_set_.insert(t).second) triplets_.push_back(t);
  }

  std::vector<Entity> entities_;
  std::vector<Triplet> triplets_;
  std::unordered_set<Triplet, TripletHash> triplet_set_;
  std::unordered_map<std::string, EntityId> index_;
  std::unordered_map<OptionId, EntityId> option_entity_;
  std::array<std::vector<EntityId>, kEntityKindCount> by_kind_;
};

inline KnowledgeGraph build_kg(const SearchSpace& space) {
  const Catalog& cat = space.catalog();
  KnowledgeGraph kg;
  for (const auto& a : cat.algorithms()) kg.intern(EntityKind::Alg, a.id);
  std::array<EntityId, kSlotCount> mods{};
  for (Slot s : kSlots) mods[slot_index(s)] = kg.intern(EntityKind::Mod, std::string(slot_name(s)));

  for (Slot s : kSlots) {
    for (OptionId gid : space.options(s)) {
      const OptionSpec& opt = cat.option(gid);
      const SolutionSpec& sol = cat.solution(opt);
      const std::string& alg_key = cat.attributed_algorithm(sol);
      const EntityId alg = *kg.find(EntityKind::Alg, alg_key);

      const EntityId o = kg.intern(EntityKind::Opt, std::to_string(gid));
      kg.option_entity_[gid] = o;
      kg.link(o, Relation::R1, alg);
      for (std::size_t g = 0; g < sol.grids.size(); ++g) {
        const auto& grid = sol.grids[g];
        std::string hyp_key = alg_key + "/" + grid.name;
        bool fresh = false;
        const EntityId hyp = kg.intern(EntityKind::Hyp, hyp_key, &fresh);
        if (fresh) kg.link(hyp, Relation::R5, alg);
        const EntityId set = kg.intern(
            EntityKind::Set, hyp_key + "=" + format_value(grid.values[opt.assignment[g]]), &fresh);
        if (fresh) kg.link(set, Relation::R4, hyp);
        kg.link(o, Relation::R2, set);
      }
      kg.link(o, Relation::R3, mods[slot_index(s)]);
    }
  }
  return kg;
}

inline KgStats kg_stats(const KnowledgeGraph& kg) { return kg.stats(); }

}  // namespace autots
