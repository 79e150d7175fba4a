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

// Command-line front end: runs searches and inspects spaces, graphs and
// histories. Every failure exits nonzero with a one-line JSON diagnostic on
// stderr.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "autots/autots.hpp"

namespace {

using autots::json;

[[noreturn]] void fail(const std::string& kind, const std::string& message, int code = 1) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
  std::exit(code);
}

autots::StageBudget parse_budget(const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    const std::string unit = text.substr(used);
    if (unit.empty() || unit == "evals") {
      if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw autots::ConfigError("evaluation budget must be a non-negative integer");
      return autots::StageBudget::evaluations(static_cast<std::size_t>(v));
    }
    if (unit == "s") return autots::StageBudget::seconds(v);
  } catch (const std::logic_error&) {
  }
  throw autots::ConfigError("--budget takes an evaluation count or seconds such as 90s, got " + text);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw autots::ConfigError("cannot write " + path);
  out << text;
}

autots::SearchSpace space_from(const std::string& file, std::size_t per_slot) {
  autots::SearchSpace s = file.empty() ? autots::build_default_space() : autots::load_space_file(file);
  if (per_slot) s = autots::evenly_spaced_subspace(s, per_slot);
  return s;
}

nlohmann::ordered_json space_stats(const autots::SearchSpace& space) {
  nlohmann::ordered_json slots;
  for (autots::Slot s : autots::kSlots) slots[std::string(autots::slot_name(s))] = space.size(s);
  nlohmann::ordered_json j;
  j["slots"] = slots;
  j["total_options"] = space.total_options();
  j["cardinality"] = autots::cardinality(space).str();
  return j;
}

nlohmann::ordered_json kg_stats_json(const autots::KnowledgeGraph& kg) {
  const auto st = kg.stats();
  nlohmann::ordered_json ent, tri;
  for (std::size_t k = 0; k < autots::kEntityKindCount; ++k)
    ent[std::string(autots::entity_kind_name(static_cast<autots::EntityKind>(k)))] = st.entities[k];
  for (std::size_t r = 0; r < autots::kRelationCount; ++r)
    tri[std::string(autots::relation_name(static_cast<autots::Relation>(r)))] = st.triplets[r];
  nlohmann::ordered_json j;
  j["entities"] = ent;
  j["triplets"] = tri;
  j["entity_total"] = kg.entities().size();
  j["triplet_total"] = kg.triplets().size();
  return j;
}

// Replies to protocol requests with a fixed rrse; used by integration tests.
int echo_worker(double rrse, std::size_t fail_after) {
  std::string line;
  std::size_t served = 0;
  while (std::getline(std::cin, line)) {
    if (fail_after && served == fail_after) return 3;
    std::cout << autots::protocol::echo_reply(line, rrse) << '\n' << std::flush;
    ++served;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"autots: automated search over forecasting-model module codes"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run a search and write a run directory");
  std::string config_path, out_dir, budget_text, mode_text, backend_text, space_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> gamma, epsilon;
  std::optional<std::size_t> k, per_slot;
  run->add_option("--config", config_path, "JSON run configuration");
  run->add_option("--out", out_dir, "run directory");
  run->add_option("--budget", budget_text, "evaluations, or seconds with an s suffix");
  run->add_option("--seed", seed);
  run->add_option("--mode", mode_text, "autots|random|vertical-only|horizontal-only|no-pruning|no-kg");
  run->add_option("--gamma", gamma, "prune ratio");
  run->add_option("--epsilon", epsilon, "random-proposal probability");
  run->add_option("--k", k, "elite set size");
  run->add_option("--backend", backend_text, "synthetic or external:<command>");
  run->add_option("--space", space_path, "space definition JSON");
  run->add_option("--per-slot", per_slot, "keep this many evenly spaced options per slot");

  // space
  auto* space = app.add_subcommand("space", "inspect the search space");
  space->require_subcommand(1);
  std::string sp_file, sp_out;
  std::size_t sp_per_slot = 0;
  auto* space_stats_cmd = space->add_subcommand("stats", "per-slot sizes and cardinality");
  auto* space_export_cmd = space->add_subcommand("export", "write the space definition JSON");
  for (auto* c : {space_stats_cmd, space_export_cmd}) {
    c->add_option("--space", sp_file, "space definition JSON");
    c->add_option("--per-slot", sp_per_slot);
  }
  space_export_cmd->add_option("--out", sp_out);

  // kg
  auto* kg = app.add_subcommand("kg", "inspect the knowledge graph");
  kg->require_subcommand(1);
  auto* kg_export_cmd = kg->add_subcommand("export", "write triplets as TSV");
  auto* kg_stats_cmd = kg->add_subcommand("stats", "entity and triplet counts");
  for (auto* c : {kg_export_cmd, kg_stats_cmd}) {
    c->add_option("--space", sp_file, "space definition JSON");
    c->add_option("--per-slot", sp_per_slot);
  }
  kg_export_cmd->add_option("--out", sp_out);

  // replay
  auto* replay = app.add_subcommand("replay", "recompute the best-rrse curve of a history");
  std::string history_path, curve_out;
  replay->add_option("history", history_path)->required();
  replay->add_option("--out", curve_out, "curve CSV (stdout when omitted)");

  // bruteforce
  auto* brute = app.add_subcommand("bruteforce", "exact optimum of a small synthetic space");
  std::size_t bf_per_slot = 4;
  std::uint64_t bf_seed = 7;
  double bf_strength = 0.0;
  std::size_t bf_cap = 1'000'000;
  brute->add_option("--per-slot", bf_per_slot);
  brute->add_option("--space", sp_file);
  brute->add_option("--oracle-seed", bf_seed);
  brute->add_option("--interaction", bf_strength);
  brute->add_option("--cap", bf_cap);

  // echo-worker
  auto* echo = app.add_subcommand("echo-worker", "protocol stub that replies with a fixed rrse");
  echo->group("");
  double echo_rrse = 0.5;
  std::size_t echo_fail_after = 0;
  echo->add_option("--rrse", echo_rrse);
  echo->add_option("--exit-after", echo_fail_after, "exit with status 3 after this many replies");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what(), 2);
  }

  try {
    if (*run) {
      autots::RunConfig cfg = config_path.empty() ? autots::RunConfig{} : autots::load_run_config(config_path);
      if (!budget_text.empty()) cfg.budget = parse_budget(budget_text);
      if (seed) cfg.seed = *seed;
      if (!mode_text.empty()) cfg.mode = autots::mode_from_name(mode_text);
      if (gamma) cfg.search.gamma = *gamma;
      if (epsilon) cfg.search.epsilon = *epsilon;
      if (k) cfg.search.K = *k;
      if (!backend_text.empty()) autots::apply_backend_flag(cfg, backend_text);
      if (!space_path.empty()) cfg.space_file = space_path;
      if (per_slot) cfg.space_per_slot = *per_slot;
      const auto rep = autots::run_mode(cfg, out_dir);
      const auto sp = autots::resolve_space(cfg);
      std::cout << autots::report_json(rep, cfg, sp.catalog()).dump(2) << std::endl;
    } else if (*space_stats_cmd) {
      std::cout << space_stats(space_from(sp_file, sp_per_slot)).dump(2) << std::endl;
    } else if (*space_export_cmd) {
      const auto s = space_from(sp_file, 0);
      write_text(sp_out, autots::space_definition_text(s.catalog()));
    } else if (*kg_export_cmd) {
      write_text(sp_out, autots::build_kg(space_from(sp_file, sp_per_slot)).to_tsv());
    } else if (*kg_stats_cmd) {
      std::cout << kg_stats_json(autots::build_kg(space_from(sp_file, sp_per_slot))).dump(2) << std::endl;
    } else if (*replay) {
      std::ifstream in(history_path, std::ios::binary);
      if (!in) throw autots::ConfigError("cannot open " + history_path);
      std::string first;
      std::getline(in, first);
      std::string hash;
      if (auto h = json::parse(first, nullptr, false); h.is_object() && h.contains("header"))
        hash = h["header"].value("config_hash", "");
      const auto history = autots::load_history(history_path);
      std::ostringstream csv;
      autots::write_curve_csv(csv, history, hash);
      if (curve_out.empty()) {
        std::cout << csv.str();
      } else {
        write_text(curve_out, csv.str());
        nlohmann::ordered_json j;
        j["config_hash"] = hash;
        j["evaluations"] = history.size();
        j["stage_counts"] = autots::stage_counts_json(autots::stage_counts(history));
        if (const auto* b = history.best())
          j["best"] = {{"iter", b->iteration}, {"rrse", b->rrse}, {"code", autots::code_ids_json(b->code)}};
        std::cout << j.dump(2) << std::endl;
      }
    } else if (*brute) {
      const auto s = space_from(sp_file, bf_per_slot);
      autots::SyntheticConfig sc;
      sc.seed = bf_seed;
      sc.interaction_strength = bf_strength;
      autots::SyntheticOracle oracle(sc);
      const auto best = autots::brute_force_best(oracle, s, bf_cap);
      nlohmann::ordered_json j;
      j["rrse"] = best.rrse;
      j["code"] = autots::code_ids_json(best.code);
      j["decoded"] = autots::describe(s.catalog(), best.code);
      j["evaluated"] = best.evaluated;
      std::cout << j.dump(2) << std::endl;
    } else if (*echo) {
      return echo_worker(echo_rrse, echo_fail_after);
    }
  } catch (const autots::Error& e) {
    fail(e.kind(), e.what());
  } catch (const json::exception& e) {
    fail("format", e.what());
  } catch (const std::exception& e) {
    fail("internal", e.what());
  }
  return 0;
}
