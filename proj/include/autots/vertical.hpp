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

// Stage one: slot-at-a-time search. Each iteration takes an elite code and
// swaps the option of one slot, cycling through the slots, for the one the
// evaluator ranks best over that slot's whole option set.

#include <optional>
#include <vector>

#include "autots/evaluator.hpp"
#include "autots/search_state.hpp"

namespace autots {

struct SlotChoice {
  OptionId option = 0;
  ModelCode code;
  double predicted = 0.0;
};

/// Scores every option of `slot` in place of base's and returns the
/// minimizer, lowest id on ties. With `skip`, codes already in that history
/// are passed over unless every option leads to one.
inline SlotChoice best_option_for_slot(const Evaluator& ev, const EmbeddingTable& table,
                                       const SearchSpace& space, const ModelCode& base, Slot slot,
                                       const History* skip = nullptr) {
  const auto opts = space.options(slot);
  std::vector<ModelCode> cands(opts.size(), base);
  for (std::size_t j = 0; j < opts.size(); ++j) cands[j][slot] = opts[j];
  const auto scores = ev.predict_batch(table, cands);
  std::optional<std::size_t> arg;
  if (skip) {
    for (std::size_t j = 0; j < scores.size(); ++j)
      if (!skip->contains(cands[j]) && (!arg || scores[j] < scores[*arg])) arg = j;
  }
  if (!arg) {
    arg = 0;
    for (std::size_t j = 1; j < scores.size(); ++j)
      if (scores[j] < scores[*arg]) arg = j;
  }
  return {opts[*arg], cands[*arg], scores[*arg]};
}

/// What a stage proposed before the cache lookup, for tracing and tests.
struct Proposal {
  Stage stage = Stage::Vertical;
  bool random = false;
  std::optional<ModelCode> base;
  ModelCode code;
};

using ProposalHook = std::function<void(const Proposal&)>;

/// Evaluates up to K uniform codes as the first elites. Each one is charged
/// to `meter` regardless of its remaining budget.
inline void initialize_elites(SearchState& st, std::size_t K, BudgetMeter& meter) {
  for (std::size_t i = 0; i < K; ++i) {
    auto c = random_unevaluated(*st.space, st.history, st.rng);
    if (!c) break;
    if (evaluate_code(st, *c, Stage::RandomInit, *st.space) == Outcome::Evaluated) meter.spend();
  }
  update_evaluator(st.surrogates, st.history, st.surrogate_cfg, st.rng);
}

struct VerticalOptions {
  bool initialize = true;
  ProposalHook on_proposal;
};

inline void run_vertical(SearchState& st, StageBudget budget, const SearchConfig& cfg,
                         const VerticalOptions& opt = {}) {
  cfg.validate();
  const SearchSpace& space = *st.space;
  BudgetMeter meter(budget);
  if (opt.initialize) initialize_elites(st, cfg.K, meter);
  if (st.elites.empty()) throw PreconditionError("vertical stage needs evaluated elites");

  std::size_t cursor = 0;
  std::size_t stall = 0;
  while (!meter.exhausted()) {
    const Slot slot = kSlots[cursor];
    cursor = (cursor + 1) % kSlotCount;

    Proposal p{Stage::Vertical, false, std::nullopt, {}};
    if (st.rng.bernoulli(cfg.epsilon)) {
      p.random = true;
      p.code = sample_uniform(space, st.rng);
    } else {
      p.base = st.elites.sample(st.rng).code;
      p.code = best_option_for_slot(st.surrogates.evaluator, st.surrogates.table, space, *p.base,
                                    slot, cfg.skip_evaluated_candidates ? &st.history : nullptr)
                   .code;
    }
    if (opt.on_proposal) opt.on_proposal(p);

    ModelCode code = p.code;
    if (st.history.contains(code)) {
      ++st.cache_hits;
      if (++stall < cfg.max_stall) continue;
      auto forced = random_unevaluated(space, st.history, st.rng);
      if (!forced) break;
      code = *forced;
      if (opt.on_proposal) opt.on_proposal({Stage::Vertical, true, std::nullopt, code});
    }
    stall = 0;
    evaluate_code(st, code, Stage::Vertical, space);
    meter.spend();
    update_evaluator(st.surrogates, st.history, st.surrogate_cfg, st.rng);
  }
}

}  // namespace autots
