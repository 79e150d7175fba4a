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

#include "autots/vertical.hpp"

#include <gtest/gtest.h>

#include "toy_search.hpp"

namespace autots {
namespace {

std::size_t differing_slots(const ModelCode& a, const ModelCode& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < kSlotCount; ++i) n += a.ids[i] != b.ids[i];
  return n;
}

TEST(BestOptionForSlot, ScansTheWholeSlot) {
  const auto space = build_default_space();
  const auto table = random_embedding_table(4, space.total_options(), 2);
  const auto ev = Evaluator::random(4, 3, 5);
  ModelCode base;
  for (Slot s : kSlots) base[s] = space.options(s)[0];
  const auto choice = best_option_for_slot(ev, table, space, base, Slot::FFM);
  double best = 1e300;
  OptionId arg = 0;
  for (OptionId o : space.options(Slot::FFM)) {
    ModelCode c = base;
    c[Slot::FFM] = o;
    const double v = ev.predict(table, c);
    if (v < best) best = v, arg = o;
  }
  EXPECT_EQ(choice.option, arg);
  EXPECT_NEAR(choice.predicted, best, 1e-12);
  EXPECT_LE(differing_slots(choice.code, base), 1u);
}

TEST(BestOptionForSlot, ConstantEvaluatorPicksLowestId) {
  const SearchSpace space(testing::uniform_catalog(5));
  const auto table = random_embedding_table(4, space.total_options(), 2);
  const Evaluator zero(4, 3);
  ModelCode base;
  for (Slot s : kSlots) base[s] = space.options(s)[3];
  for (Slot s : kSlots)
    EXPECT_EQ(best_option_for_slot(zero, table, space, base, s).option, space.options(s)[0]);
}

TEST(BestOptionForSlot, SkipsEvaluatedCodes) {
  const SearchSpace space(testing::uniform_catalog(5));
  const auto table = random_embedding_table(4, space.total_options(), 2);
  const Evaluator zero(4, 3);
  ModelCode base;
  for (Slot s : kSlots) base[s] = space.options(s)[3];
  History h;
  for (std::size_t j : {0u, 1u, 3u}) {
    ModelCode c = base;
    c[Slot::FEnM] = space.options(Slot::FEnM)[j];
    h.append({c, 0.5, h.size(), Stage::RandomInit});
  }
  const auto opts = space.options(Slot::FEnM);
  EXPECT_EQ(best_option_for_slot(zero, table, space, base, Slot::FEnM, &h).option, opts[2]);
  EXPECT_EQ(best_option_for_slot(zero, table, space, base, Slot::FEnM).option, opts[0]);
  for (std::size_t j : {2u, 4u}) {
    ModelCode c = base;
    c[Slot::FEnM] = opts[j];
    h.append({c, 0.5, h.size(), Stage::RandomInit});
  }
  // Every option evaluated: falls back to the plain minimizer.
  EXPECT_EQ(best_option_for_slot(zero, table, space, base, Slot::FEnM, &h).option, opts[0]);
}

TEST(Vertical, GuidedProposalsAreFreshWhileTheSlotHasRoom) {
  testing::ToySearch t;
  SearchConfig cfg;
  cfg.K = 3;
  cfg.epsilon = 0.0;
  std::size_t guided = 0, repeats = 0;
  VerticalOptions opt;
  opt.on_proposal = [&](const Proposal& p) {
    if (p.random) return;
    ++guided;
    if (!t.st.history.contains(p.code)) return;
    ++repeats;
    // A repeat is allowed only when some slot of the base has no fresh option left.
    bool slot_full = false;
    for (Slot s : kSlots) {
      bool full = true;
      for (OptionId o : t.space.options(s)) {
        ModelCode c = *p.base;
        c[s] = o;
        full = full && t.st.history.contains(c);
      }
      slot_full = slot_full || full;
    }
    EXPECT_TRUE(slot_full);
  };
  run_vertical(t.st, StageBudget::evaluations(60), cfg, opt);
  EXPECT_EQ(t.st.history.size(), 60u);
  EXPECT_GE(guided, 57u);
  EXPECT_EQ(t.st.cache_hits, repeats);
}

TEST(Vertical, ZeroBudgetOnlyInitializes) {
  testing::ToySearch t;
  SearchConfig cfg;
  cfg.K = 3;
  run_vertical(t.st, StageBudget::evaluations(0), cfg);
  EXPECT_EQ(t.st.history.size(), 3u);
  for (const auto& r : t.st.history.records()) EXPECT_EQ(r.stage, Stage::RandomInit);
}

TEST(Vertical, SpendsExactlyTheBudget) {
  testing::ToySearch t;
  SearchConfig cfg;
  cfg.K = 3;
  run_vertical(t.st, StageBudget::evaluations(40), cfg);
  EXPECT_EQ(t.st.history.size(), 40u);
  EXPECT_EQ(t.oracle.calls(), 40u);
  EXPECT_EQ(t.st.backend_calls, 40u);
  std::size_t init = 0;
  for (const auto& r : t.st.history.records()) init += r.stage == Stage::RandomInit;
  EXPECT_EQ(init, 3u);
}

TEST(Vertical, GuidedProposalsChangeAtMostOneSlotInRoundRobin) {
  testing::ToySearch t;
  SearchConfig cfg;
  cfg.K = 3;
  std::vector<Proposal> seen;
  VerticalOptions opt;
  opt.on_proposal = [&](const Proposal& p) { seen.push_back(p); };
  run_vertical(t.st, StageBudget::evaluations(60), cfg, opt);
  ASSERT_FALSE(seen.empty());
  std::size_t guided = 0;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    const auto& p = seen[i];
    EXPECT_EQ(p.stage, Stage::Vertical);
    if (p.random) continue;
    ++guided;
    ASSERT_TRUE(p.base);
    const std::size_t d = differing_slots(p.code, *p.base);
    ASSERT_LE(d, 1u);
    if (d == 1) {
      // The changed slot is this iteration's round-robin slot.
      std::size_t changed = 0;
      while (p.code.ids[changed] == p.base->ids[changed]) ++changed;
      EXPECT_EQ(changed, i % kSlotCount) << i;
    }
  }
  EXPECT_GT(guided, 30u);
}

TEST(Vertical, EpsilonOneIsRandomSearch) {
  testing::ToySearch t;
  SearchConfig cfg;
  cfg.K = 2;
  cfg.epsilon = 1.0;
  std::size_t guided = 0;
  VerticalOptions opt;
  opt.on_proposal = [&](const Proposal& p) { guided += !p.random; };
  run_vertical(t.st, StageBudget::evaluations(30), cfg, opt);
  EXPECT_EQ(guided, 0u);
  EXPECT_EQ(t.st.history.size(), 30u);
}

TEST(Vertical, ReproducibleForASeed) {
  testing::ToySearch a(6, 4), b(6, 4);
  SearchConfig cfg;
  cfg.K = 3;
  run_vertical(a.st, StageBudget::evaluations(25), cfg);
  run_vertical(b.st, StageBudget::evaluations(25), cfg);
  EXPECT_EQ(a.st.history, b.st.history);
  EXPECT_EQ(a.st.surrogates.evaluator, b.st.surrogates.evaluator);
}

TEST(Vertical, ExhaustedSpaceStops) {
  testing::ToySearch t(1);  // a single code
  SearchConfig cfg;
  cfg.K = 3;
  run_vertical(t.st, StageBudget::evaluations(10), cfg);
  EXPECT_EQ(t.st.history.size(), 1u);
}

TEST(Vertical, RejectsMissingElites) {
  testing::ToySearch t;
  VerticalOptions opt;
  opt.initialize = false;
  EXPECT_THROW(run_vertical(t.st, StageBudget::evaluations(3), {}, opt), PreconditionError);
}

TEST(Vertical, FindsGoodCodesOnSeparableOracle) {
  testing::ToySearch t(4, 2, 0.0);
  SearchConfig cfg;
  cfg.K = 3;
  run_vertical(t.st, StageBudget::evaluations(80), cfg);
  const double found = t.st.history.best()->rrse;
  // Rank among all 4^7 codes; 80 random draws would expect rank ~200.
  std::size_t better = 0;
  for (std::size_t m = 0; m < 16384; ++m) {
    ModelCode c;
    for (std::size_t i = 0; i < kSlotCount; ++i)
      c.ids[i] = t.space.options(kSlots[i])[(m >> (2 * i)) & 3];
    better += t.oracle.noiseless(c) < found;
  }
  EXPECT_LT(better, 164u);
}

}  // namespace
}  // namespace autots
