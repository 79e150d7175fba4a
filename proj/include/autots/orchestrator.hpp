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

// End-to-end runs: graph, graph embedding, the two search stages and the
// baseline/ablation modes, with an optional run directory:
//
//   config.json        config snapshot and its hash
//   history.jsonl      header line, then one record per evaluation
//   prune_trace.jsonl  header line, then the kept ids of every re-prune
//   embeddings.atse    final option embeddings
//   surrogates.atse    final evaluator and importance predictor
//   result.json        best code (ids and decoded), stage counts, parameters
//   curve.csv          best rrse after each evaluation

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "autots/backend.hpp"
#include "autots/external_backend.hpp"
#include "autots/horizontal.hpp"
#include "autots/knowledge_graph.hpp"
#include "autots/run_config.hpp"
#include "autots/search_state.hpp"
#include "autots/surrogates.hpp"
#include "autots/transr.hpp"
#include "autots/vertical.hpp"

namespace autots {

using StageCounts = std::array<std::size_t, 5>;  // indexed by Stage

inline StageCounts stage_counts(const History& h) {
  StageCounts c{};
  for (const auto& r : h.records()) ++c[static_cast<std::size_t>(r.stage)];
  return c;
}

inline json stage_counts_json(const StageCounts& c) {
  json j = json::object();
  for (Stage s : {Stage::RandomInit, Stage::Vertical, Stage::Horizontal, Stage::Random,
                  Stage::Mutation})
    j[std::string(stage_name(s))] = c[static_cast<std::size_t>(s)];
  return j;
}

struct RunReport {
  Mode mode = Mode::AutoTS;
  std::string config_hash;
  History history;
  std::optional<EvalRecord> best;
  std::vector<EvalRecord> elites;
  StageCounts counts{};
  std::size_t vertical_budget = 0;
  std::size_t horizontal_budget = 0;
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t backend_failures = 0;
  double seconds = 0.0;
  std::size_t prune_events = 0;
  Surrogates surrogates;
};

inline SearchSpace resolve_space(const RunConfig& cfg) {
  SearchSpace space = cfg.space_file.empty() ? build_default_space() : load_space_file(cfg.space_file);
  if (cfg.space_per_slot) space = evenly_spaced_subspace(space, cfg.space_per_slot);
  return space;
}

inline std::unique_ptr<Backend> make_backend(const BackendSpec& spec,
                                             std::shared_ptr<const Catalog> catalog) {
  if (spec.kind == BackendSpec::Kind::Synthetic) return std::make_unique<SyntheticOracle>(spec.synthetic);
  return std::make_unique<ExternalBackend>(std::move(catalog), spec.external);
}

/// Option embeddings for a run: trained graph embeddings, or a seeded random
/// table when the graph is disabled.
inline EmbeddingTable initial_embeddings(const RunConfig& cfg, const SearchSpace& space) {
  const std::size_t rows = space.catalog().option_count();
  const std::uint64_t fallback = derive_seed(cfg.seed, 0x656d62);
  if (!cfg.use_kg || cfg.mode == Mode::NoKg)
    return random_embedding_table(cfg.embedding_width, rows, fallback);
  const KnowledgeGraph kg = build_kg(space);
  const TransRModel model = train_transr(kg, cfg.transr_config());
  return export_option_embeddings(model, kg, space, cfg.embedding_width, fallback);
}

namespace detail {

inline nlohmann::ordered_json header_json(const RunConfig& cfg, const std::string& hash,
                                          const char* format) {
  nlohmann::ordered_json h;
  h["format"] = format;
  h["config_hash"] = hash;
  h["mode"] = std::string(mode_name(cfg.mode));
  h["seed"] = cfg.seed;
  return h;
}

inline std::ofstream open_out(const std::filesystem::path& p, bool binary = false) {
  std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
  if (!out) throw ConfigError("cannot write " + p.string());
  return out;
}

}  // namespace detail

inline json report_json(const RunReport& r, const RunConfig& cfg, const Catalog& catalog) {
  nlohmann::ordered_json j;
  j["config_hash"] = r.config_hash;
  j["mode"] = std::string(mode_name(r.mode));
  if (r.best) {
    j["best"] = {{"iter", r.best->iteration},
                 {"stage", std::string(stage_name(r.best->stage))},
                 {"rrse", r.best->rrse},
                 {"code", code_ids_json(r.best->code)},
                 {"decoded", describe(catalog, r.best->code)}};
  } else {
    j["best"] = nullptr;
  }
  j["evaluations"] = r.history.size();
  j["stage_counts"] = stage_counts_json(r.counts);
  j["budget"] = {{"kind", cfg.budget.kind == StageBudget::Kind::Evaluations ? "evaluations" : "seconds"},
                 {"total", cfg.budget.amount},
                 {"vertical", r.vertical_budget},
                 {"horizontal", r.horizontal_budget}};
  j["parameters"] = {{"K", cfg.search.K},
                     {"epsilon", cfg.search.epsilon},
                     {"gamma", cfg.search.gamma},
                     {"candidates", cfg.search.candidates},
                     {"embedding_width", cfg.embedding_width},
                     {"evaluator_hidden", cfg.surrogates.hidden},
                     {"seed", cfg.seed}};
  j["backend"] = {{"name", cfg.backend.kind == BackendSpec::Kind::Synthetic ? "synthetic" : "external"},
                  {"calls", r.backend_calls},
                  {"cache_hits", r.cache_hits},
                  {"failures", r.backend_failures}};
  j["prune_events"] = r.prune_events;
  j["seconds"] = r.seconds;
  return j;
}

inline void write_curve_csv(std::ostream& out, const History& h, const std::string& hash) {
  out << "# config_hash=" << hash << '\n' << "evaluations,best_rrse\n";
  const auto curve = best_curve(h);
  char buf[64];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, curve[i]);
    out << buf;
  }
}

/// Runs `cfg.mode`. With a non-empty `out_dir` the run directory is written;
/// the history file is appended record by record so that a failed run keeps
/// every completed evaluation. `backend` overrides the configured one.
inline RunReport run_mode(const RunConfig& cfg, const std::string& out_dir = {},
                          Backend* backend = nullptr) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const SearchSpace space = resolve_space(cfg);
  std::unique_ptr<Backend> owned;
  if (!backend) {
    owned = make_backend(cfg.backend, space.catalog_ptr());
    backend = owned.get();
  }

  RunReport rep;
  rep.mode = cfg.mode;
  rep.config_hash = config_hash(cfg);

  std::filesystem::path dir;
  std::ofstream history_out, prune_out;
  if (!out_dir.empty()) {
    dir = out_dir;
    std::filesystem::create_directories(dir);
    auto conf = detail::open_out(dir / "config.json");
    nlohmann::ordered_json snap;
    snap["config_hash"] = rep.config_hash;
    snap["config"] = cfg.to_json();
    conf << snap.dump(2) << '\n';
    history_out = detail::open_out(dir / "history.jsonl");
    history_out << json{{"header", detail::header_json(cfg, rep.config_hash, "autots-history/1")}}.dump()
                << '\n';
    history_out.flush();
    prune_out = detail::open_out(dir / "prune_trace.jsonl");
    prune_out << json{{"header", detail::header_json(cfg, rep.config_hash, "autots-prune-trace/1")}}
                     .dump()
              << '\n';
  }

  SearchState st;
  st.space = &space;
  st.backend = backend;
  st.surrogate_cfg = cfg.surrogates;
  st.elites = EliteSet(cfg.search.K);
  st.rng = Rng(derive_seed(cfg.seed, 0x736561726368));
  if (history_out.is_open())
    st.on_record = [&](const EvalRecord& r) {
      history_out << record_line(r) << '\n';
      history_out.flush();
    };
  st.on_prune = [&](std::size_t iter, const SearchSpace& pruned) {
    ++rep.prune_events;
    if (!prune_out.is_open()) return;
    nlohmann::ordered_json line;
    line["iter"] = iter;
    nlohmann::ordered_json kept;
    for (Slot s : kSlots) {
      const auto opts = pruned.options(s);
      kept[std::string(slot_name(s))] = std::vector<OptionId>(opts.begin(), opts.end());
    }
    line["kept"] = std::move(kept);
    prune_out << line.dump() << '\n';
  };

  const bool guided = cfg.mode != Mode::Random;
  if (guided)
    st.surrogates = Surrogates::create(initial_embeddings(cfg, space), cfg.surrogates,
                                       derive_seed(cfg.seed, 0x737572));

  const bool by_count = cfg.budget.kind == StageBudget::Kind::Evaluations;
  const auto total = static_cast<std::size_t>(by_count ? cfg.budget.amount : 0.0);
  const std::size_t K = cfg.search.K;
  auto budget_of = [&](std::size_t evals, double fraction) {
    return by_count ? StageBudget::evaluations(evals) : StageBudget::seconds(cfg.budget.amount * fraction);
  };

  switch (cfg.mode) {
    case Mode::AutoTS:
    case Mode::NoKg: {
      const std::size_t v = std::max(total / 2, K);
      const std::size_t h = total > v ? total - v : 0;
      rep.vertical_budget = v;
      rep.horizontal_budget = h;
      run_vertical(st, budget_of(v, 0.5), cfg.search);
      run_horizontal(st, budget_of(h, 0.5), cfg.search);
      break;
    }
    case Mode::VerticalOnly:
      rep.vertical_budget = std::max(total, K);
      run_vertical(st, budget_of(rep.vertical_budget, 1.0), cfg.search);
      break;
    case Mode::HorizontalOnly:
      rep.horizontal_budget = std::max(total, K);
      run_horizontal(st, budget_of(rep.horizontal_budget, 1.0), cfg.search,
                     HorizontalOptions{.initialize = true, .prune = true, .on_proposal = {}});
      break;
    case Mode::NoPruning:
      rep.horizontal_budget = std::max(total, K);
      run_horizontal(st, budget_of(rep.horizontal_budget, 1.0), cfg.search,
                     HorizontalOptions{.initialize = true, .prune = false, .on_proposal = {}});
      break;
    case Mode::Random: {
      BudgetMeter meter(budget_of(std::max(total, K), 1.0));
      while (!meter.exhausted() || st.history.size() < K) {
        auto c = random_unevaluated(space, st.history, st.rng);
        if (!c) break;
        evaluate_code(st, *c, Stage::Random, space);
        meter.spend();
      }
      break;
    }
  }

  rep.counts = stage_counts(st.history);
  if (const auto* b = st.history.best()) rep.best = *b;
  rep.elites = st.elites.entries();
  rep.backend_calls = st.backend_calls;
  rep.cache_hits = st.cache_hits;
  rep.backend_failures = st.backend_failures;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.history = std::move(st.history);
  rep.surrogates = std::move(st.surrogates);

  if (!dir.empty()) {
    history_out.close();
    prune_out.close();
    if (guided) {
      auto emb = detail::open_out(dir / "embeddings.atse", true);
      write_embedding_checkpoint(emb, rep.surrogates.table);
      auto sur = detail::open_out(dir / "surrogates.atse", true);
      write_surrogate_checkpoint(sur, rep.surrogates.evaluator, rep.surrogates.predictor);
    }
    auto res = detail::open_out(dir / "result.json");
    res << report_json(rep, cfg, space.catalog()).dump(2) << '\n';
    auto curve = detail::open_out(dir / "curve.csv");
    write_curve_csv(curve, rep.history, rep.config_hash);
  }
  return rep;
}

inline RunReport run_autots(RunConfig cfg, const std::string& out_dir = {},
                            Backend* backend = nullptr) {
  cfg.mode = Mode::AutoTS;
  return run_mode(cfg, out_dir, backend);
}

}  // namespace autots
