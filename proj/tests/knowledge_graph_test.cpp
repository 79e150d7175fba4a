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

#include "autots/knowledge_graph.hpp"

#include <gtest/gtest.h>

#include <map>

#include "test_util.hpp"

namespace autots {
namespace {

const KnowledgeGraph& default_kg() {
  static const KnowledgeGraph kg = build_kg(build_default_space());
  return kg;
}

// Hand count from the catalog, per solution (#options) * (2 + #grids):
//   IPM   1*2 + 200*6                               =  1202
//   FExM  1*2 + 30*4 + 2160*7 + 3125*7 + 1*2        = 37119  (two slots)
//   FEnM  1*2 + 1800*7 + 3125*7                     = 34477  (two slots)
//   FFM   1*2 + 5*3                                 =    17
//   OPM   8*3 + 6*3 + 1*2 + 2160*7 + 5*3            = 15179
// Hyperparameters per source algorithm: T1 1, T2 3, T3 5, T4 5, T5 8 -> 22.
// Settings: T1 8, T2 17, T3 24, T4 27, T5 36 -> 112.
constexpr std::size_t kOptionTriplets = 1202 + 2 * 37119 + 2 * 34477 + 17 + 15179;

TEST(DefaultKg, EntityCounts) {
  const auto st = default_kg().stats();
  EXPECT_EQ(st.entity_count(EntityKind::Alg), 5u);
  EXPECT_EQ(st.entity_count(EntityKind::Mod), 7u);
  EXPECT_EQ(st.entity_count(EntityKind::Opt), 22873u);
  EXPECT_EQ(st.entity_count(EntityKind::Hyp), 22u);
  EXPECT_EQ(st.entity_count(EntityKind::Set), 112u);
}

TEST(DefaultKg, TripletCounts) {
  const auto st = default_kg().stats();
  EXPECT_EQ(st.triplet_count(Relation::R1), 22873u);
  EXPECT_EQ(st.triplet_count(Relation::R3), 22873u);
  EXPECT_EQ(st.triplet_count(Relation::R4), 112u);
  EXPECT_EQ(st.triplet_count(Relation::R5), 22u);
  EXPECT_EQ(st.triplet_count(Relation::R1) + st.triplet_count(Relation::R2) +
                st.triplet_count(Relation::R3),
            kOptionTriplets);
  EXPECT_EQ(default_kg().triplets().size(), kOptionTriplets + 134);
}

TEST(DefaultKg, EveryTripletRespectsItsSignature) {
  const auto& kg = default_kg();
  for (const auto& t : kg.triplets()) {
    const auto [hk, tk] = relation_signature(t.relation);
    ASSERT_EQ(kg.entity(t.head).kind, hk);
    ASSERT_EQ(kg.entity(t.tail).kind, tk);
  }
}

TEST(DefaultKg, PerOptionTripletsAreTwoPlusHyperparameters) {
  const auto& kg = default_kg();
  const auto& cat = *default_catalog();
  std::vector<std::size_t> per_entity(kg.entities().size(), 0);
  std::vector<std::array<int, kRelationCount>> rel(kg.entities().size());
  for (const auto& t : kg.triplets()) {
    ++per_entity[t.head];
    ++rel[t.head][static_cast<std::size_t>(t.relation)];
  }
  for (OptionId id = 0; id < cat.option_count(); ++id) {
    const auto e = kg.option_entity(id);
    ASSERT_TRUE(e.has_value());
    const auto& sol = cat.solution(cat.option(id));
    ASSERT_EQ(per_entity[*e], 2 + sol.grids.size()) << id;
    ASSERT_EQ(rel[*e][0], 1);
    ASSERT_EQ(rel[*e][2], 1);
  }
}

TEST(DefaultKg, NamespacedKeysAndAttribution) {
  const auto& kg = default_kg();
  EXPECT_TRUE(kg.find(EntityKind::Set, "T5/node dim=20"));
  EXPECT_TRUE(kg.find(EntityKind::Set, "T4/thetas dim=(1,2)"));
  EXPECT_TRUE(kg.find(EntityKind::Set, "T3/weight norm=True"));
  EXPECT_TRUE(kg.find(EntityKind::Hyp, "T2/number of layers"));
  EXPECT_TRUE(kg.find(EntityKind::Hyp, "T5/number of layers"));
  EXPECT_FALSE(kg.find(EntityKind::Hyp, "number of layers"));

  // The source-less FExM5 option is attributed to the first algorithm.
  const auto& cat = *default_catalog();
  const auto none_id = static_cast<OptionId>(cat.slot_offset(Slot::FExM) + 5316);
  const auto e = *kg.option_entity(none_id);
  const auto t1 = *kg.find(EntityKind::Alg, "T1");
  EXPECT_TRUE(kg.contains({e, Relation::R1, t1}));
  const auto mod = *kg.find(EntityKind::Mod, "FExM");
  EXPECT_TRUE(kg.contains({e, Relation::R3, mod}));
}

TEST(DefaultKg, NoDuplicateTriplets) {
  const auto& kg = default_kg();
  std::unordered_set<Triplet, TripletHash> seen;
  for (const auto& t : kg.triplets()) ASSERT_TRUE(seen.insert(t).second);
}

TEST(DefaultKg, TsvExport) {
  const auto tsv = default_kg().to_tsv();
  EXPECT_EQ(static_cast<std::size_t>(std::count(tsv.begin(), tsv.end(), '\n')),
            default_kg().triplets().size());
  EXPECT_EQ(tsv.rfind("Opt:0\tR1\tAlg:T1\n", 0), 0u);
}

TEST(RestrictedKg, CoversOnlyKeptOptions) {
  const auto space = evenly_spaced_subspace(build_default_space(), 4);
  const auto kg = build_kg(space);
  EXPECT_EQ(kg.stats().entity_count(EntityKind::Opt), 28u);
  EXPECT_FALSE(kg.option_entity(1).has_value());
  EXPECT_TRUE(kg.option_entity(0).has_value());
  for (const auto& t : kg.triplets()) {
    const auto [hk, tk] = relation_signature(t.relation);
    ASSERT_EQ(kg.entity(t.head).kind, hk);
    ASSERT_EQ(kg.entity(t.tail).kind, tk);
  }
}

TEST(ToyKg, GridCatalog) {
  const SearchSpace space(testing::uniform_catalog(3));
  const auto kg = build_kg(space);
  const auto st = kg.stats();
  EXPECT_EQ(st.entity_count(EntityKind::Opt), 21u);
  EXPECT_EQ(st.entity_count(EntityKind::Hyp), 1u);  // A/width shared by all slots
  EXPECT_EQ(st.entity_count(EntityKind::Set), 3u);
  EXPECT_EQ(kg.triplets().size(), 21u * 3 + 3 + 1);
}

}  // namespace
}  // namespace autots
