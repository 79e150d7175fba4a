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

#include <algorithm>
#include <cstdint>
#include <string>

#include "autots/errors.hpp"
#include "autots/rng.hpp"
#include "autots/search_space.hpp"

namespace autots {

/// Source of validation rrse for a model code.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual double evaluate(const ModelCode& code) = 0;

  /// True when evaluate() is a pure function of the code.
  virtual bool deterministic() const { return false; }

  virtual std::string name() const = 0;

  std::size_t calls() const noexcept { return calls_; }

 protected:
  std::size_t calls_ = 0;
};

struct SyntheticConfig {
  std::uint64_t seed = 7;
  double interaction_strength = 0.0;
  double noise_sd = 0.0;
  double base = 1.5;
  double floor = 1e-3;
  double cap = 2.0;
};

/// Deterministic tabular stand-in for real training.
///
///   u(g)    = U(splitmix64(splitmix64(seed) ^ g))
///   w(a, b) = strength * U(splitmix64(splitmix64(seed ^ 0x5851f42d4c957f2d) ^ (a << 32 | b)))
///   rrse    = clamp(base - sum_i u(g_i)/7 - sum_{i=1..6} w(g_i, g_{i+1})/6 + noise, floor, cap)
///
/// with U(x) = (x >> 11) * 2^-53 and noise ~ N(0, noise_sd^2) from a seeded
/// stream (absent when noise_sd = 0).
class SyntheticOracle final : public Backend {
 public:
  explicit SyntheticOracle(SyntheticConfig cfg = {})
      : cfg_(cfg),
        utility_key_(splitmix64(cfg.seed)),
        pair_key_(splitmix64(cfg.seed ^ 0x5851f42d4c957f2dULL)),
        noise_(derive_seed(cfg.seed, 0x6e6f697365ULL)) {
    if (cfg.noise_sd < 0.0) throw ConfigError("noise_sd must be non-negative");
    if (!(cfg.floor > 0.0) || !(cfg.cap >= cfg.floor))
      throw ConfigError("synthetic oracle needs 0 < floor <= cap");
  }

  double utility(OptionId g) const { return unit_interval(splitmix64(utility_key_ ^ g)); }

  double interaction(OptionId a, OptionId b) const {
    if (cfg_.interaction_strength == 0.0) return 0.0;
    const std::uint64_t key = (std::uint64_t{a} << 32) | b;
    return cfg_.interaction_strength * unit_interval(splitmix64(pair_key_ ^ key));
  }

  double noiseless(const ModelCode& code) const {
    return std::clamp(unclamped(code), cfg_.floor, cfg_.cap);
  }

  double evaluate(const ModelCode& code) override {
    ++calls_;
    double v = unclamped(code);
    if (cfg_.noise_sd > 0.0) v += cfg_.noise_sd * noise_.normal();
    return std::clamp(v, cfg_.floor, cfg_.cap);
  }

  bool deterministic() const override { return cfg_.noise_sd == 0.0; }
  std::string name() const override { return "synthetic"; }
  const SyntheticConfig& config() const noexcept { return cfg_; }

 private:
  double unclamped(const ModelCode& code) const {
    double u = 0.0;
    for (OptionId g : code.ids) u += utility(g);
    double w = 0.0;
    for (std::size_t i = 0; i + 1 < kSlotCount; ++i) w += interaction(code.ids[i], code.ids[i + 1]);
    return cfg_.base - u / 7.0 - w / 6.0;
  }

  SyntheticConfig cfg_;
  std::uint64_t utility_key_;
  std::uint64_t pair_key_;
  Rng noise_;
};

struct BruteForceResult {
  ModelCode code;
  double rrse = 0.0;
  std::size_t evaluated = 0;
};

/// Exact optimum by enumerating every code of `space` in serialization
/// order (first slot slowest); ties keep the earliest code.
inline BruteForceResult brute_force_best(Backend& backend, const SearchSpace& space,
                                         std::size_t max_codes = 1'000'000) {
  if (!backend.deterministic())
    throw PreconditionError("brute force requires a noiseless backend");
  const BigInt card = cardinality(space);
  if (card > max_codes)
    throw PreconditionError("space has " + card.str() + " codes, above the brute-force cap of " +
                            std::to_string(max_codes));
  std::array<std::size_t, kSlotCount> pos{};
  BruteForceResult best;
  bool first = true;
  while (true) {
    ModelCode code;
    for (Slot s : kSlots) code[s] = space.options(s)[pos[slot_index(s)]];
    const double v = backend.evaluate(code);
    ++best.evaluated;
    if (first || v < best.rrse) {
      best.code = code;
      best.rrse = v;
      first = false;
    }
    std::size_t i = kSlotCount;
    while (i > 0) {
      --i;
      if (++pos[i] < space.size(kSlots[i])) break;
      pos[i] = 0;
      if (i == 0) return best;
    }
  }
}

}  // namespace autots
