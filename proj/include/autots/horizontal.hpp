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

// Stage two: multi-slot random fusion moves inside a pruned space. Every
// slot keeps only its top-gamma options by learned importance; the pruned
// space is rebuilt after each evaluation as the predictor learns.

#include <array>
#include <numeric>
#include <unordered_set>
#include <vector>

#include "autots/importance.hpp"
#include "autots/search_state.hpp"
#include "autots/vertical.hpp"

namespace autots {

struct FusionDraw {
  ModelCode code;
  std::array<bool, kSlotCount> mutated{};
};

/// Picks m ~ U{m_min..m_max} distinct slots of `base` and replaces each with
/// a uniform option of that slot in `pruned`.
inline FusionDraw draw_fusion(const ModelCode& base, const SearchSpace& pruned, Rng& rng,
                              std::size_t m_min = 1, std::size_t m_max = kSlotCount) {
  const std::size_t m = m_min + rng.index(m_max - m_min + 1);
  std::array<std::size_t, kSlotCount> order;
  std::iota(order.begin(), order.end(), std::size_t{0});
  FusionDraw d{base, {}};
  for (std::size_t i = 0; i < m; ++i) {
    std::swap(order[i], order[i + rng.index(kSlotCount - i)]);
    const Slot s = kSlots[order[i]];
    const auto opts = pruned.options(s);
    d.code[s] = opts[rng.index(opts.size())];
    d.mutated[order[i]] = true;
  }
  return d;
}

/// C fusion draws, deduplicated against each other and against base, in
/// draw order. Never empty: when every draw collapses onto base the list is
/// {base}.
inline std::vector<ModelCode> rfusion_candidates(const ModelCode& base, const SearchSpace& pruned,
                                                 std::size_t C, Rng& rng, std::size_t m_min = 1,
                                                 std::size_t m_max = kSlotCount) {
  if (C == 0) throw ConfigError("candidate count must be positive");
  std::unordered_set<ModelCode, ModelCodeHash> seen{base};
  std::vector<ModelCode> out;
  out.reserve(C);
  for (std::size_t i = 0; i < C; ++i) {
    auto d = draw_fusion(base, pruned, rng, m_min, m_max);
    if (seen.insert(d.code).second) out.push_back(d.code);
  }
  if (out.empty()) out.push_back(base);
  return out;
}

struct HorizontalOptions {
  bool initialize = false;  // evaluate K random elites first
  bool prune = true;        // false: fusion over the full space, no predictor
  ProposalHook on_proposal;
};

namespace detail {

/// Index of the lowest predicted score, first on ties.
inline std::size_t argmin_prediction(const Surrogates& s, const std::vector<ModelCode>& cands) {
  const auto scores = s.evaluator.predict_batch(s.table, cands);
  std::size_t arg = 0;
  for (std::size_t j = 1; j < scores.size(); ++j)
    if (scores[j] < scores[arg]) arg = j;
  return arg;
}

}  // namespace detail

inline void run_horizontal(SearchState& st, StageBudget budget, const SearchConfig& cfg,
                           const HorizontalOptions& opt = {}) {
  cfg.validate();
  const SearchSpace& space = *st.space;
  const Stage tag = opt.prune ? Stage::Horizontal : Stage::Mutation;
  BudgetMeter meter(budget);
  if (opt.initialize) initialize_elites(st, cfg.K, meter);
  if (st.elites.empty()) throw PreconditionError("horizontal stage needs evaluated elites");

  std::optional<SearchSpace> pruned;
  auto reprune = [&] {
    pruned = prune_space(st.surrogates.predictor, st.surrogates.table, space, cfg.gamma);
    if (st.on_prune) st.on_prune(st.history.size(), *pruned);
  };
  if (opt.prune) {
    fit_predictor_initial(st.surrogates, st.history, space, st.surrogate_cfg);
    reprune();
  }

  std::size_t stall = 0;
  while (!meter.exhausted()) {
    const SearchSpace& box = opt.prune ? *pruned : space;
    Proposal p{tag, false, std::nullopt, {}};
    if (st.rng.bernoulli(cfg.epsilon)) {
      p.random = true;
      p.code = sample_uniform(space, st.rng);
    } else {
      p.base = st.elites.sample(st.rng).code;
      auto cands = rfusion_candidates(*p.base, box, cfg.candidates, st.rng, cfg.mutation_min,
                                      cfg.mutation_max);
      if (cfg.skip_evaluated_candidates) {
        std::vector<ModelCode> fresh;
        fresh.reserve(cands.size());
        for (const auto& c : cands)
          if (!st.history.contains(c)) fresh.push_back(c);
        if (!fresh.empty()) cands.swap(fresh);
      }
      p.code = cands[detail::argmin_prediction(st.surrogates, cands)];
    }
    if (opt.on_proposal) opt.on_proposal(p);

    ModelCode code = p.code;
    if (st.history.contains(code)) {
      ++st.cache_hits;
      if (++stall < cfg.max_stall) continue;
      auto forced = random_unevaluated(box, st.history, st.rng);
      if (!forced) forced = random_unevaluated(space, st.history, st.rng);
      if (!forced) break;
      code = *forced;
      if (opt.on_proposal) opt.on_proposal({tag, true, std::nullopt, code});
    }
    stall = 0;
    evaluate_code(st, code, tag, space);
    meter.spend();
    update_evaluator(st.surrogates, st.history, st.surrogate_cfg, st.rng);
    if (opt.prune) {
      update_predictor(st.surrogates, st.history, *pruned, st.surrogate_cfg, st.rng);
      reprune();
    }
  }
}

}  // namespace autots
