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

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>

#include <json.hpp>

#include "autots/backend.hpp"
#include "autots/errors.hpp"
#include "autots/external_backend.hpp"
#include "autots/search_state.hpp"
#include "autots/surrogates.hpp"
#include "autots/transr.hpp"

namespace autots {

enum class Mode { AutoTS, Random, VerticalOnly, HorizontalOnly, NoPruning, NoKg };

inline constexpr std::array<Mode, 6> kModes = {Mode::AutoTS,         Mode::Random,
                                               Mode::VerticalOnly,   Mode::HorizontalOnly,
                                               Mode::NoPruning,      Mode::NoKg};

constexpr std::string_view mode_name(Mode m) noexcept {
  switch (m) {
    case Mode::AutoTS: return "autots";
    case Mode::Random: return "random";
    case Mode::VerticalOnly: return "vertical-only";
    case Mode::HorizontalOnly: return "horizontal-only";
    case Mode::NoPruning: return "no-pruning";
    case Mode::NoKg: return "no-kg";
  }
  return "unknown";
}

inline Mode mode_from_name(std::string_view n) {
  for (Mode m : kModes)
    if (mode_name(m) == n) return m;
  throw ConfigError("unknown mode '" + std::string(n) +
                    "' (expected autots, random, vertical-only, horizontal-only, no-pruning or "
                    "no-kg)");
}

struct BackendSpec {
  enum class Kind { Synthetic, External };
  Kind kind = Kind::Synthetic;
  SyntheticConfig synthetic;
  ExternalConfig external;
};

struct RunConfig {
  std::uint64_t seed = 0;
  Mode mode = Mode::AutoTS;
  StageBudget budget = StageBudget::evaluations(300);
  SearchConfig search;
  std::size_t embedding_width = 32;
  bool use_kg = true;
  TransRConfig transr;  // d follows embedding_width; seed follows the run seed
  SurrogateConfig surrogates;
  std::string space_file;
  std::size_t space_per_slot = 0;  // 0 keeps every option
  BackendSpec backend;

  void validate() const {
    search.validate();
    surrogates.validate();
    if (embedding_width == 0) throw ConfigError("embedding width must be positive");
    if (budget.amount < 0.0) throw ConfigError("budget must be non-negative");
    if (budget.kind == StageBudget::Kind::Evaluations && budget.amount != std::floor(budget.amount))
      throw ConfigError("evaluation budget must be an integer");
    TransRConfig t = transr;
    t.d = embedding_width;
    t.validate();
    if (backend.kind == BackendSpec::Kind::External && backend.external.command.empty())
      throw ConfigError("external backend needs a command");
  }

  TransRConfig transr_config() const {
    TransRConfig t = transr;
    t.d = embedding_width;
    t.seed = derive_seed(seed, 0x7472);
    return t;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["mode"] = std::string(mode_name(mode));
    j["budget"] = {{"kind", budget.kind == StageBudget::Kind::Evaluations ? "evaluations" : "seconds"},
                   {"total", budget.amount}};
    j["search"] = {{"K", search.K},
                   {"epsilon", search.epsilon},
                   {"gamma", search.gamma},
                   {"candidates", search.candidates},
                   {"mutation_min", search.mutation_min},
                   {"mutation_max", search.mutation_max},
                   {"max_stall", search.max_stall},
                   {"skip_evaluated_candidates", search.skip_evaluated_candidates}};
    j["embedding"] = {{"width", embedding_width}, {"use_kg", use_kg}};
    j["transr"] = {{"k", transr.k},
                   {"margin", transr.margin},
                   {"lr", transr.lr},
                   {"epochs", transr.epochs},
                   {"neg_per_pos", transr.neg_per_pos}};
    const auto& ev = surrogates.evaluator;
    j["evaluator"] = {{"hidden", surrogates.hidden},
                      {"lr", ev.lr},
                      {"epochs", ev.epochs},
                      {"batch", ev.batch},
                      {"clip", ev.clip},
                      {"fine_tune_embeddings", ev.fine_tune_embeddings},
                      {"full_retrain_every", surrogates.full_retrain_every},
                      {"epochs_full", surrogates.epochs_full},
                      {"reinit_on_full_retrain", surrogates.reinit_on_full_retrain}};
    j["predictor"] = {{"lr", surrogates.predictor_lr},
                      {"initial_steps", surrogates.predictor_initial_steps},
                      {"batch", surrogates.predictor_batch},
                      {"clip", surrogates.predictor_clip},
                      {"p_max", surrogates.p_max ? nlohmann::ordered_json(*surrogates.p_max)
                                                 : nlohmann::ordered_json(nullptr)}};
    j["space"] = {{"file", space_file}, {"per_slot", space_per_slot}};
    const auto& sy = backend.synthetic;
    const auto& ex = backend.external;
    j["backend"] = {
        {"kind", backend.kind == BackendSpec::Kind::Synthetic ? "synthetic" : "external"},
        {"synthetic",
         {{"seed", sy.seed},
          {"interaction_strength", sy.interaction_strength},
          {"noise_sd", sy.noise_sd},
          {"base", sy.base},
          {"floor", sy.floor},
          {"cap", sy.cap}}},
        {"external", {{"command", ex.command}, {"timeout_s", ex.timeout_s}, {"epochs", ex.epochs}}}};
    return j;
  }

  static RunConfig from_json(const json& j);
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError("unknown config key " + where + "." + k);
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key " + where + "." + key + ": " + e.what());
  }
}

}  // namespace detail

inline RunConfig RunConfig::from_json(const json& j) {
  using detail::check_keys;
  using detail::read_field;
  RunConfig c;
  check_keys(j, {"seed", "mode", "budget", "search", "embedding", "transr", "evaluator",
                 "predictor", "space", "backend"},
             "config");
  read_field(j, "seed", c.seed, "config");
  if (j.contains("mode")) c.mode = mode_from_name(j.at("mode").get<std::string>());
  if (j.contains("budget")) {
    const auto& b = j["budget"];
    check_keys(b, {"kind", "total"}, "budget");
    std::string kind = "evaluations";
    read_field(b, "kind", kind, "budget");
    if (kind == "evaluations") c.budget.kind = StageBudget::Kind::Evaluations;
    else if (kind == "seconds") c.budget.kind = StageBudget::Kind::Seconds;
    else throw ConfigError("budget.kind must be 'evaluations' or 'seconds'");
    read_field(b, "total", c.budget.amount, "budget");
  }
  if (j.contains("search")) {
    const auto& s = j["search"];
    check_keys(s, {"K", "epsilon", "gamma", "candidates", "mutation_min", "mutation_max",
                   "max_stall", "skip_evaluated_candidates"},
               "search");
    read_field(s, "K", c.search.K, "search");
    read_field(s, "epsilon", c.search.epsilon, "search");
    read_field(s, "gamma", c.search.gamma, "search");
    read_field(s, "candidates", c.search.candidates, "search");
    read_field(s, "mutation_min", c.search.mutation_min, "search");
    read_field(s, "mutation_max", c.search.mutation_max, "search");
    read_field(s, "max_stall", c.search.max_stall, "search");
    read_field(s, "skip_evaluated_candidates", c.search.skip_evaluated_candidates, "search");
  }
  if (j.contains("embedding")) {
    const auto& e = j["embedding"];
    check_keys(e, {"width", "use_kg"}, "embedding");
    read_field(e, "width", c.embedding_width, "embedding");
    read_field(e, "use_kg", c.use_kg, "embedding");
  }
  if (j.contains("transr")) {
    const auto& t = j["transr"];
    check_keys(t, {"k", "margin", "lr", "epochs", "neg_per_pos"}, "transr");
    read_field(t, "k", c.transr.k, "transr");
    read_field(t, "margin", c.transr.margin, "transr");
    read_field(t, "lr", c.transr.lr, "transr");
    read_field(t, "epochs", c.transr.epochs, "transr");
    read_field(t, "neg_per_pos", c.transr.neg_per_pos, "transr");
  }
  if (j.contains("evaluator")) {
    const auto& e = j["evaluator"];
    check_keys(e, {"hidden", "lr", "epochs", "batch", "clip", "fine_tune_embeddings",
                   "full_retrain_every", "epochs_full", "reinit_on_full_retrain"},
               "evaluator");
    auto& ev = c.surrogates.evaluator;
    read_field(e, "hidden", c.surrogates.hidden, "evaluator");
    read_field(e, "lr", ev.lr, "evaluator");
    read_field(e, "epochs", ev.epochs, "evaluator");
    read_field(e, "batch", ev.batch, "evaluator");
    read_field(e, "clip", ev.clip, "evaluator");
    read_field(e, "fine_tune_embeddings", ev.fine_tune_embeddings, "evaluator");
    read_field(e, "full_retrain_every", c.surrogates.full_retrain_every, "evaluator");
    read_field(e, "epochs_full", c.surrogates.epochs_full, "evaluator");
    read_field(e, "reinit_on_full_retrain", c.surrogates.reinit_on_full_retrain, "evaluator");
  }
  if (j.contains("predictor")) {
    const auto& p = j["predictor"];
    check_keys(p, {"lr", "initial_steps", "batch", "clip", "p_max"}, "predictor");
    read_field(p, "lr", c.surrogates.predictor_lr, "predictor");
    read_field(p, "initial_steps", c.surrogates.predictor_initial_steps, "predictor");
    read_field(p, "batch", c.surrogates.predictor_batch, "predictor");
    read_field(p, "clip", c.surrogates.predictor_clip, "predictor");
    if (p.contains("p_max") && !p["p_max"].is_null()) {
      double v = 0.0;
      read_field(p, "p_max", v, "predictor");
      c.surrogates.p_max = v;
    }
  }
  if (j.contains("space")) {
    const auto& s = j["space"];
    check_keys(s, {"file", "per_slot"}, "space");
    read_field(s, "file", c.space_file, "space");
    read_field(s, "per_slot", c.space_per_slot, "space");
  }
  if (j.contains("backend")) {
    const auto& b = j["backend"];
    check_keys(b, {"kind", "synthetic", "external"}, "backend");
    std::string kind = "synthetic";
    read_field(b, "kind", kind, "backend");
    if (kind == "synthetic") c.backend.kind = BackendSpec::Kind::Synthetic;
    else if (kind == "external") c.backend.kind = BackendSpec::Kind::External;
    else throw ConfigError("backend.kind must be 'synthetic' or 'external'");
    if (b.contains("synthetic")) {
      const auto& s = b["synthetic"];
      check_keys(s, {"seed", "interaction_strength", "noise_sd", "base", "floor", "cap"},
                 "backend.synthetic");
      auto& sy = c.backend.synthetic;
      read_field(s, "seed", sy.seed, "backend.synthetic");
      read_field(s, "interaction_strength", sy.interaction_strength, "backend.synthetic");
      read_field(s, "noise_sd", sy.noise_sd, "backend.synthetic");
      read_field(s, "base", sy.base, "backend.synthetic");
      read_field(s, "floor", sy.floor, "backend.synthetic");
      read_field(s, "cap", sy.cap, "backend.synthetic");
    }
    if (b.contains("external")) {
      const auto& e = b["external"];
      check_keys(e, {"command", "timeout_s", "epochs"}, "backend.external");
      auto& ex = c.backend.external;
      read_field(e, "command", ex.command, "backend.external");
      read_field(e, "timeout_s", ex.timeout_s, "backend.external");
      read_field(e, "epochs", ex.epochs, "backend.external");
    }
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

/// 64-bit FNV-1a of the canonical config dump, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : c.to_json().dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Parses "synthetic" or "external:<command>".
inline void apply_backend_flag(RunConfig& c, const std::string& flag) {
  if (flag == "synthetic") {
    c.backend.kind = BackendSpec::Kind::Synthetic;
  } else if (flag.rfind("external:", 0) == 0 && flag.size() > 9) {
    c.backend.kind = BackendSpec::Kind::External;
    c.backend.external.command = flag.substr(9);
  } else {
    throw ConfigError("--backend must be 'synthetic' or 'external:<command>'");
  }
}

}  // namespace autots
