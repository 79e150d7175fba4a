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

#include "autots/horizontal.hpp"

#include <gtest/gtest.h>

#include <set>

#include "toy_search.hpp"

namespace autots {
namespace {

TEST(RFusion, PerSlotMutationRateIsFourSevenths) {
  const SearchSpace space(testing::uniform_catalog(50));
  Rng rng(3);
  ModelCode base;
  for (Slot s : kSlots) base[s] = space.options(s)[0];
  std::array<std::size_t, kSlotCount> hits{};
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = draw_fusion(base, space, rng);
    std::size_t m = 0;
    for (std::size_t s = 0; s < kSlotCount; ++s) {
      hits[s] += d.mutated[s];
      m += d.mutated[s];
      if (!d.mutated[s]) {
        ASSERT_EQ(d.code.ids[s], base.ids[s]);
      }
    }
    ASSERT_GE(m, 1u);
  }
  for (auto h : hits) EXPECT_NEAR(static_cast<double>(h) / n, 4.0 / 7.0, 0.02);
}

TEST(RFusion, ZeroMutationsReturnBase) {
  const SearchSpace space(testing::uniform_catalog(4));
  Rng rng(1);
  ModelCode base;
  for (Slot s : kSlots) base[s] = space.options(s)[2];
  const auto c = rfusion_candidates(base, space, 16, rng, 0, 0);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0], base);
  EXPECT_THROW(rfusion_candidates(base, space, 0, rng), ConfigError);
}

TEST(RFusion, StaysInPrunedSetsAndDeduplicates) {
  const SearchSpace full(testing::uniform_catalog(8));
  KeepLists keep;
  for (Slot s : kSlots) keep[slot_index(s)] = {full.options(s)[1], full.options(s)[6]};
  const auto pruned = full.restrict(keep);
  ModelCode base;
  for (Slot s : kSlots) base[s] = full.options(s)[3];  // outside the box
  Rng rng(9);
  const auto cands = rfusion_candidates(base, pruned, 512, rng);
  std::set<ModelCode> uniq(cands.begin(), cands.end());
  EXPECT_EQ(uniq.size(), cands.size());
  EXPECT_FALSE(uniq.count(base));
  for (const auto& c : cands)
    for (Slot s : kSlots) {
      const OptionId o = c[s];
      EXPECT_TRUE(o == base[s] || pruned.contains(s, o));
    }
  // 3^7 - 1 codes differ from base using base/box options; most are hit.
  EXPECT_GT(cands.size(), 300u);
}

TEST(RFusion, SeededDraws) {
  const SearchSpace space(testing::uniform_catalog(5));
  ModelCode base;
  Rng a(4), b(4);
  for (Slot s : kSlots) base[s] = space.options(s)[0];
  EXPECT_EQ(rfusion_candidates(base, space, 64, a), rfusion_candidates(base, space, 64, b));
}

TEST(Horizontal, ProposalsRespectThePrunedBox) {
  testing::ToySearch t(8, 3);
  SearchConfig cfg;
  cfg.K = 3;
  cfg.gamma = 0.25;
  std::vector<std::vector<std::size_t>> sizes;
  std::optional<SearchSpace> box;
  t.st.on_prune = [&](std::size_t, const SearchSpace& p) {
    std::vector<std::size_t> s;
    for (Slot x : kSlots) s.push_back(p.size(x));
    sizes.push_back(s);
    box = p;
  };
  std::size_t checked = 0;
  HorizontalOptions opt;
  opt.initialize = true;
  opt.on_proposal = [&](const Proposal& p) {
    ASSERT_EQ(p.stage, Stage::Horizontal);
    if (p.random) return;
    ASSERT_TRUE(p.base && box);
    for (Slot s : kSlots) ASSERT_TRUE(p.code[s] == (*p.base)[s] || box->contains(s, p.code[s]));
    ++checked;
  };
  run_horizontal(t.st, StageBudget::evaluations(40), cfg, opt);
  EXPECT_EQ(t.st.history.size(), 40u);
  EXPECT_GT(checked, 20u);
  // Initial prune plus one per evaluation after initialization.
  EXPECT_EQ(sizes.size(), 1u + 37u);
  for (const auto& s : sizes)
    for (auto n : s) EXPECT_EQ(n, 2u);
}

TEST(Horizontal, WithoutPruningUsesMutationTagAndNoPrunes) {
  testing::ToySearch t;
  std::size_t prunes = 0;
  t.st.on_prune = [&](std::size_t, const SearchSpace&) { ++prunes; };
  SearchConfig cfg;
  cfg.K = 3;
  HorizontalOptions opt;
  opt.initialize = true;
  opt.prune = false;
  const auto before = t.st.surrogates.predictor;
  run_horizontal(t.st, StageBudget::evaluations(20), cfg, opt);
  EXPECT_EQ(prunes, 0u);
  EXPECT_EQ(t.st.surrogates.predictor, before);
  for (const auto& r : t.st.history.records())
    EXPECT_TRUE(r.stage == Stage::Mutation || r.stage == Stage::RandomInit);
}

TEST(Horizontal, ContinuesFromVerticalElites) {
  testing::ToySearch t;
  SearchConfig cfg;
  cfg.K = 3;
  run_vertical(t.st, StageBudget::evaluations(15), cfg);
  run_horizontal(t.st, StageBudget::evaluations(15), cfg);
  EXPECT_EQ(t.st.history.size(), 30u);
  std::size_t h = 0;
  for (const auto& r : t.st.history.records()) h += r.stage == Stage::Horizontal;
  EXPECT_EQ(h, 15u);
}

TEST(Horizontal, FullGammaSingleMutationIsCoordinateMoves) {
  testing::ToySearch t;
  SearchConfig cfg;
  cfg.K = 3;
  cfg.gamma = 1.0;
  cfg.candidates = 1;
  cfg.mutation_min = cfg.mutation_max = 1;
  cfg.epsilon = 0.0;
  HorizontalOptions opt;
  opt.initialize = true;
  opt.on_proposal = [&](const Proposal& p) {
    if (p.random) return;
    std::size_t d = 0;
    for (std::size_t i = 0; i < kSlotCount; ++i) d += p.code.ids[i] != p.base->ids[i];
    EXPECT_LE(d, 1u);
  };
  run_horizontal(t.st, StageBudget::evaluations(25), cfg, opt);
  EXPECT_EQ(t.st.history.size(), 25u);
}

TEST(Horizontal, SkipsEvaluatedCandidatesWhenPossible) {
  testing::ToySearch t(2);
  SearchConfig cfg;
  cfg.K = 3;
  cfg.epsilon = 0.0;
  HorizontalOptions opt;
  opt.initialize = true;
  std::size_t repeats = 0;
  opt.on_proposal = [&](const Proposal& p) {
    if (!p.random) repeats += t.st.history.contains(p.code);
  };
  run_horizontal(t.st, StageBudget::evaluations(60), cfg, opt);
  // 128 codes; every proposal while fresh fusion codes remain is new.
  EXPECT_EQ(repeats, 0u);
  EXPECT_EQ(t.st.history.size(), 60u);
}

}  // namespace
}  // namespace autots
