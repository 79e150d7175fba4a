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

#include <chrono>
#include <functional>
#include <optional>
#include <string>

#include "autots/backend.hpp"
#include "autots/elite_set.hpp"
#include "autots/errors.hpp"
#include "autots/history.hpp"
#include "autots/rng.hpp"
#include "autots/search_space.hpp"
#include "autots/surrogates.hpp"

namespace autots {

struct StageBudget {
  enum class Kind { Evaluations, Seconds };
  Kind kind = Kind::Evaluations;
  double amount = 0.0;

  static StageBudget evaluations(std::size_t n) { return {Kind::Evaluations, static_cast<double>(n)}; }
  static StageBudget seconds(double s) { return {Kind::Seconds, s}; }
};

struct SearchConfig {
  std::size_t K = 5;
  double epsilon = 0.1;
  double gamma = 0.05;
  std::size_t candidates = 512;
  std::size_t mutation_min = 1;
  std::size_t mutation_max = kSlotCount;
  std::size_t max_stall = 32;
  bool skip_evaluated_candidates = true;

  void validate() const {
    if (K == 0) throw ConfigError("K must be positive");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
    if (candidates == 0) throw ConfigError("candidate count must be positive");
    if (mutation_min > mutation_max || mutation_max > kSlotCount)
      throw ConfigError("mutation range must satisfy min <= max <= 7");
    if (max_stall == 0) throw ConfigError("max_stall must be positive");
  }
};

/// Everything a search stage reads and mutates.
struct SearchState {
  const SearchSpace* space = nullptr;
  Backend* backend = nullptr;
  SurrogateConfig surrogate_cfg;
  Surrogates surrogates;
  History history;
  EliteSet elites;
  Rng rng{0};

  std::function<void(const EvalRecord&)> on_record;
  std::function<void(std::size_t iteration, const SearchSpace& pruned)> on_prune;

  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t backend_failures = 0;
  std::string last_failure;
};

/// A uniform code of `space` absent from the history. Falls back to an
/// odometer walk from a random start when rejection sampling keeps hitting
/// evaluated codes; empty once the space is exhausted.
inline std::optional<ModelCode> random_unevaluated(const SearchSpace& space, const History& h,
                                                   Rng& rng) {
  for (int attempt = 0; attempt < 256; ++attempt) {
    ModelCode c = sample_uniform(space, rng);
    if (!h.contains(c)) return c;
  }
  if (cardinality(space) <= h.size()) {
    std::size_t inside = 0;
    for (const auto& r : h.records()) inside += space.contains(r.code);
    if (cardinality(space) <= inside) return std::nullopt;
  }
  std::array<std::size_t, kSlotCount> pos{};
  for (Slot s : kSlots) pos[slot_index(s)] = rng.index(space.size(s));
  const auto start = pos;
  do {
    ModelCode c;
    for (Slot s : kSlots) c[s] = space.options(s)[pos[slot_index(s)]];
    if (!h.contains(c)) return c;
    std::size_t i = kSlotCount;
    while (i > 0) {
      --i;
      if (++pos[i] < space.size(kSlots[i])) break;
      pos[i] = 0;
    }
  } while (pos != start);
  return std::nullopt;
}

enum class Outcome { Evaluated, CacheHit };

/// Evaluates `code`, or serves it from the history. A backend failure is
/// retried once with a fresh random code from `fallback_space`; a second
/// failure aborts the search.
inline Outcome evaluate_code(SearchState& st, const ModelCode& code, Stage stage,
                             const SearchSpace& fallback_space) {
  if (st.history.contains(code)) {
    ++st.cache_hits;
    return Outcome::CacheHit;
  }
  ModelCode target = code;
  double rrse = 0.0;
  for (int attempt = 0;; ++attempt) {
    try {
      ++st.backend_calls;
      rrse = st.backend->evaluate(target);
      if (!std::isfinite(rrse) || rrse < 0.0)
        throw BackendError("backend returned invalid rrse " + std::to_string(rrse));
      break;
    } catch (const BackendError& e) {
      ++st.backend_failures;
      st.last_failure = e.what();
      if (attempt == 1)
        throw SearchAborted("backend failed twice in a row; last error: " + st.last_failure);
      auto fresh = random_unevaluated(fallback_space, st.history, st.rng);
      if (!fresh) throw SearchAborted("backend failed and the space is exhausted: " + st.last_failure);
      target = *fresh;
    }
  }
  EvalRecord r{target, rrse, st.history.size(), stage};
  st.history.append(r);
  st.elites.offer(r);
  if (st.on_record) st.on_record(r);
  return Outcome::Evaluated;
}

/// Tracks consumption of one stage's budget.
class BudgetMeter {
 public:
  explicit BudgetMeter(StageBudget b) : budget_(b), start_(std::chrono::steady_clock::now()) {}

  void spend() { ++used_; }
  std::size_t used() const noexcept { return used_; }

  bool exhausted() const {
    if (budget_.kind == StageBudget::Kind::Evaluations)
      return static_cast<double>(used_) >= budget_.amount;
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
    return elapsed.count() >= budget_.amount;
  }

 private:
  StageBudget budget_;
  std::chrono::steady_clock::time_point start_;
  std::size_t used_ = 0;
};

}  // namespace autots
