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

#include <memory>

#include "autots/backend.hpp"
#include "autots/search_state.hpp"
#include "autots/surrogates.hpp"
#include "test_util.hpp"

namespace autots::testing {

/// A small search state over a toy space with a synthetic oracle and a
/// narrow evaluator, cheap enough for per-proposal checks.
struct ToySearch {
  explicit ToySearch(std::size_t per_slot = 6, std::uint64_t seed = 1, double interaction = 0.3)
      : space(uniform_catalog(per_slot)), oracle([&] {
          SyntheticConfig c;
          c.seed = seed + 100;
          c.interaction_strength = interaction;
          return c;
        }()) {
    cfg.hidden = 8;
    cfg.evaluator.epochs = 2;
    cfg.epochs_full = 5;
    cfg.predictor_initial_steps = 10;
    st.space = &space;
    st.backend = &oracle;
    st.surrogate_cfg = cfg;
    st.elites = EliteSet(3);
    st.rng = Rng(seed);
    st.surrogates = Surrogates::create(random_embedding_table(8, space.total_options(), seed), cfg,
                                       seed);
  }
  SearchSpace space;
  SyntheticOracle oracle;
  SurrogateConfig cfg;
  SearchState st;
};

}  // namespace autots::testing
