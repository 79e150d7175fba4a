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

// Modular forecasting-model search space.
//
// A model is composed of seven slots. Each slot draws from a catalog of
// module solutions; a solution together with one full hyperparameter
// assignment is an *option*. Options are numbered densely over the whole
// catalog: slots in canonical order, then solutions in listing order, then
// assignments in mixed-radix order with the last grid varying fastest.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "autots/errors.hpp"
#include "autots/rng.hpp"

namespace autots {

using json = nlohmann::json;
using BigInt = boost::multiprecision::cpp_int;
using OptionId = std::uint32_t;

enum class ModuleKind : std::uint8_t { IPM, FExM, FEnM, FFM, OPM };

enum class Slot : std::uint8_t { IPM, FExM, FExM_add, FEnM, FEnM_add, FFM, OPM };

inline constexpr std::size_t kSlotCount = 7;

inline constexpr std::array<Slot, kSlotCount> kSlots = {
    Slot::IPM, Slot::FExM, Slot::FExM_add, Slot::FEnM, Slot::FEnM_add, Slot::FFM, Slot::OPM};

constexpr std::size_t slot_index(Slot s) noexcept { return static_cast<std::size_t>(s); }

constexpr std::string_view slot_name(Slot s) noexcept {
  constexpr std::array<std::string_view, kSlotCount> names = {
      "IPM", "FExM", "FExM_add", "FEnM", "FEnM_add", "FFM", "OPM"};
  return names[slot_index(s)];
}

inline std::optional<Slot> slot_from_name(std::string_view name) {
  for (Slot s : kSlots)
    if (slot_name(s) == name) return s;
  return std::nullopt;
}

constexpr ModuleKind kind_of(Slot s) noexcept {
  switch (s) {
    case Slot::IPM: return ModuleKind::IPM;
    case Slot::FExM:
    case Slot::FExM_add: return ModuleKind::FExM;
    case Slot::FEnM:
    case Slot::FEnM_add: return ModuleKind::FEnM;
    case Slot::FFM: return ModuleKind::FFM;
    case Slot::OPM: return ModuleKind::OPM;
  }
  return ModuleKind::IPM;
}

constexpr std::string_view kind_name(ModuleKind k) noexcept {
  constexpr std::array<std::string_view, 5> names = {"IPM", "FExM", "FEnM", "FFM", "OPM"};
  return names[static_cast<std::size_t>(k)];
}

/// Text form of an opaque hyperparameter value, used in knowledge-graph keys:
/// booleans as True/False, strings unquoted, tuples as "(a,b)".
inline std::string format_value(const json& v) {
  if (v.is_boolean()) return v.get<bool>() ? "True" : "False";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ',';
      out += format_value(v[i]);
    }
    return out + ")";
  }
  return v.dump();
}

struct HyperparamGrid {
  std::string name;
  std::vector<json> values;
};

struct SolutionSpec {
  std::string id;    // e.g. "FExM3"
  std::string name;  // e.g. "Generic Trend and Seasonality Block"
  std::vector<std::string> sources;
  std::vector<HyperparamGrid> grids;

  std::size_t option_count() const {
    std::size_t n = 1;
    for (const auto& g : grids) n *= g.values.size();
    return n;
  }
};

struct Algorithm {
  std::string id;
  std::string name;
};

/// A solution plus one full hyperparameter assignment, placed in a slot.
struct OptionSpec {
  Slot slot{};
  std::uint16_t solution_index = 0;
  std::uint32_t local_index = 0;
  std::vector<std::uint16_t> assignment;  // one value index per grid
  OptionId global_id = 0;

  friend bool operator==(const OptionSpec&, const OptionSpec&) = default;
};

/// The complete option catalog: algorithms, per-slot solution lists and the
/// dense option table. Immutable once built.
class Catalog {
 public:
  using SlotSolutions = std::array<std::vector<SolutionSpec>, kSlotCount>;

  static std::shared_ptr<const Catalog> create(std::vector<Algorithm> algorithms,
                                               SlotSolutions solutions) {
    auto cat = std::shared_ptr<Catalog>(new Catalog());
    cat->algorithms_ = std::move(algorithms);
    cat->solutions_ = std::move(solutions);
    cat->validate();
    cat->build_options();
    return cat;
  }

  const std::vector<Algorithm>& algorithms() const noexcept { return algorithms_; }

  std::span<const SolutionSpec> solutions(Slot s) const noexcept {
    return solutions_[slot_index(s)];
  }

  const SolutionSpec& solution(const OptionSpec& opt) const {
    return solutions_[slot_index(opt.slot)][opt.solution_index];
  }

  std::size_t option_count() const noexcept { return options_.size(); }

  std::size_t slot_offset(Slot s) const noexcept { return offsets_[slot_index(s)]; }
  std::size_t slot_size(Slot s) const noexcept {
    return offsets_[slot_index(s) + 1] - offsets_[slot_index(s)];
  }

  /// Decodes a global id. Throws RangeError when out of range.
  const OptionSpec& option(OptionId id) const {
    if (id >= options_.size())
      throw RangeError("option id " + std::to_string(id) + " out of range [0, " +
                       std::to_string(options_.size()) + ")");
    return options_[id];
  }

  /// Inverse of option(): (slot, solution, assignment) -> global id.
  OptionId encode(Slot s, std::size_t solution_index,
                  std::span<const std::uint16_t> assignment) const {
    const auto& sols = solutions_[slot_index(s)];
    if (solution_index >= sols.size()) throw RangeError("solution index out of range");
    const auto& sol = sols[solution_index];
    if (assignment.size() != sol.grids.size()) throw RangeError("assignment arity mismatch");
    std::size_t local = 0;
    for (std::size_t g = 0; g < sol.grids.size(); ++g) {
      if (assignment[g] >= sol.grids[g].values.size())
        throw RangeError("assignment value out of range");
      local = local * sol.grids[g].values.size() + assignment[g];
    }
    std::size_t base = slot_offset(s);
    for (std::size_t j = 0; j < solution_index; ++j) base += sols[j].option_count();
    return static_cast<OptionId>(base + local);
  }

  /// Algorithm id an option is attributed to: the first listed source of its
  /// solution, or the first catalog algorithm for source-less solutions.
  const std::string& attributed_algorithm(const SolutionSpec& sol) const {
    return sol.sources.empty() ? algorithms_.front().id : sol.sources.front();
  }

  json to_json() const {
    json algs = json::array();
    for (const auto& a : algorithms_) algs.push_back({{"id", a.id}, {"name", a.name}});
    json slots = json::array();
    for (Slot s : kSlots) {
      json sols = json::array();
      for (const auto& sol : solutions(s)) {
        json grids = json::array();
        for (const auto& g : sol.grids) grids.push_back({{"name", g.name}, {"values", g.values}});
        sols.push_back(
            {{"id", sol.id}, {"name", sol.name}, {"sources", sol.sources}, {"grids", grids}});
      }
      slots.push_back({{"slot", std::string(slot_name(s))}, {"solutions", sols}});
    }
    return {{"format", "autots-space/1"}, {"algorithms", algs}, {"slots", slots}};
  }

  static std::shared_ptr<const Catalog> from_json(const json& j) {
    try {
      std::vector<Algorithm> algs;
      for (const auto& a : j.at("algorithms"))
        algs.push_back({a.at("id").get<std::string>(), a.value("name", std::string{})});
      const auto& slots = j.at("slots");
      if (!slots.is_array() || slots.size() != kSlotCount)
        throw FormatError("space definition must list exactly 7 slots");
      SlotSolutions sols;
      for (std::size_t i = 0; i < kSlotCount; ++i) {
        const auto& js = slots[i];
        const auto name = js.at("slot").get<std::string>();
        if (name != slot_name(kSlots[i]))
          throw FormatError("slot " + std::to_string(i) + " must be " +
                            std::string(slot_name(kSlots[i])) + ", found " + name);
        for (const auto& jsol : js.at("solutions")) {
          SolutionSpec sol;
          sol.id = jsol.at("id").get<std::string>();
          sol.name = jsol.value("name", std::string{});
          sol.sources = jsol.value("sources", std::vector<std::string>{});
          for (const auto& jg : jsol.value("grids", json::array()))
            sol.grids.push_back(
                {jg.at("name").get<std::string>(), jg.at("values").get<std::vector<json>>()});
          sols[i].push_back(std::move(sol));
        }
      }
      return create(std::move(algs), std::move(sols));
    } catch (const json::exception& e) {
      throw FormatError(std::string("malformed space definition: ") + e.what());
    }
  }

 private:
  Catalog() = default;

  void validate() const {
    if (algorithms_.empty()) throw FormatError("space definition has no algorithms");
    for (Slot s : kSlots) {
      const auto& sols = solutions_[slot_index(s)];
      if (sols.empty())
        throw FormatError("slot " + std::string(slot_name(s)) + " has no solutions");
      if (sols.size() > 0xffff) throw FormatError("too many solutions in a slot");
      for (const auto& sol : sols) {
        for (const auto& src : sol.sources) {
          const bool known = std::any_of(algorithms_.begin(), algorithms_.end(),
                                         [&](const Algorithm& a) { return a.id == src; });
          if (!known) throw FormatError("solution " + sol.id + " names unknown source " + src);
        }
        for (const auto& g : sol.grids) {
          if (g.values.empty())
            throw FormatError("grid " + g.name + " of " + sol.id + " is empty");
          if (g.values.size() > 0xffff) throw FormatError("grid " + g.name + " too large");
          for (std::size_t a = 0; a < g.values.size(); ++a)
            for (std::size_t b = a + 1; b < g.values.size(); ++b)
              if (g.values[a] == g.values[b])
                throw FormatError("grid " + g.name + " of " + sol.id + " has duplicate values");
        }
      }
    }
  }

  void build_options() {
    offsets_[0] = 0;
    for (Slot s : kSlots) {
      const auto& sols = solutions_[slot_index(s)];
      for (std::size_t si = 0; si < sols.size(); ++si) {
        const auto& sol = sols[si];
        const std::size_t n = sol.option_count();
        for (std::size_t local = 0; local < n; ++local) {
          OptionSpec opt;
          opt.slot = s;
          opt.solution_index = static_cast<std::uint16_t>(si);
          opt.local_index = static_cast<std::uint32_t>(local);
          opt.assignment.resize(sol.grids.size());
          std::size_t rest = local;
          for (std::size_t g = sol.grids.size(); g-- > 0;) {
            const std::size_t radix = sol.grids[g].values.size();
            opt.assignment[g] = static_cast<std::uint16_t>(rest % radix);
            rest /= radix;
          }
          opt.global_id = static_cast<OptionId>(options_.size());
          options_.push_back(std::move(opt));
        }
      }
      offsets_[slot_index(s) + 1] = options_.size();
    }
  }

  std::vector<Algorithm> algorithms_;
  SlotSolutions solutions_;
  std::vector<OptionSpec> options_;
  std::array<std::size_t, kSlotCount + 1> offsets_{};
};

/// One option per slot, canonical slot order.
struct ModelCode {
  std::array<OptionId, kSlotCount> ids{};

  OptionId operator[](Slot s) const noexcept { return ids[slot_index(s)]; }
  OptionId& operator[](Slot s) noexcept { return ids[slot_index(s)]; }

  friend auto operator<=>(const ModelCode&, const ModelCode&) = default;
};

struct ModelCodeHash {
  std::size_t operator()(const ModelCode& c) const noexcept {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (OptionId id : c.ids) h = splitmix64(h ^ id);
    return static_cast<std::size_t>(h);
  }
};

inline json code_ids_json(const ModelCode& c) {
  json a = json::array();
  for (OptionId id : c.ids) a.push_back(id);
  return a;
}

inline std::string to_string(const ModelCode& c) {
  std::string out = "(";
  for (std::size_t i = 0; i < kSlotCount; ++i) {
    if (i) out += ',';
    out += std::to_string(c.ids[i]);
  }
  return out + ")";
}

using KeepLists = std::array<std::vector<OptionId>, kSlotCount>;

/// A (possibly restricted) view of a catalog: one sorted option-id list per
/// slot. Restriction never renumbers ids, so embedding rows stay aligned.
class SearchSpace {
 public:
  explicit SearchSpace(std::shared_ptr<const Catalog> catalog) : catalog_(std::move(catalog)) {
    for (Slot s : kSlots) {
      auto& keep = keep_[slot_index(s)];
      keep.resize(catalog_->slot_size(s));
      for (std::size_t j = 0; j < keep.size(); ++j)
        keep[j] = static_cast<OptionId>(catalog_->slot_offset(s) + j);
    }
  }

  const Catalog& catalog() const noexcept { return *catalog_; }
  const std::shared_ptr<const Catalog>& catalog_ptr() const noexcept { return catalog_; }

  std::span<const OptionId> options(Slot s) const noexcept { return keep_[slot_index(s)]; }
  std::size_t size(Slot s) const noexcept { return keep_[slot_index(s)].size(); }
  const KeepLists& keep_lists() const noexcept { return keep_; }

  bool contains(Slot s, OptionId id) const {
    const auto& k = keep_[slot_index(s)];
    return std::binary_search(k.begin(), k.end(), id);
  }

  bool contains(const ModelCode& code) const {
    for (Slot s : kSlots)
      if (!contains(s, code[s])) return false;
    return true;
  }

  /// Sum of per-slot option counts.
  std::size_t total_options() const noexcept {
    std::size_t n = 0;
    for (const auto& k : keep_) n += k.size();
    return n;
  }

  bool slot_owns(Slot s, OptionId id) const noexcept {
    return id >= catalog_->slot_offset(s) &&
           id < catalog_->slot_offset(s) + catalog_->slot_size(s);
  }

  /// Intersects each slot with the given keep list. Ids must belong to their
  /// slot; an empty keep list, or an empty intersection, is invalid.
  SearchSpace restrict(const KeepLists& keep) const {
    SearchSpace out = *this;
    for (Slot s : kSlots) {
      auto wanted = keep[slot_index(s)];
      if (wanted.empty())
        throw InvalidPruning("empty keep list for slot " + std::string(slot_name(s)));
      for (OptionId id : wanted)
        if (!slot_owns(s, id))
          throw InvalidPruning("option " + std::to_string(id) + " does not belong to slot " +
                               std::string(slot_name(s)));
      std::sort(wanted.begin(), wanted.end());
      wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
      std::vector<OptionId> merged;
      const auto& cur = keep_[slot_index(s)];
      std::set_intersection(cur.begin(), cur.end(), wanted.begin(), wanted.end(),
                            std::back_inserter(merged));
      if (merged.empty())
        throw InvalidPruning("restriction leaves slot " + std::string(slot_name(s)) + " empty");
      out.keep_[slot_index(s)] = std::move(merged);
    }
    return out;
  }

 private:
  std::shared_ptr<const Catalog> catalog_;
  KeepLists keep_;
};

// ---------------------------------------------------------------------------
// Built-in catalog

namespace detail {

inline HyperparamGrid grid(std::string name, std::vector<json> values) {
  return {std::move(name), std::move(values)};
}

inline std::vector<json> channels() { return {8, 16, 32, 64, 96}; }
inline std::vector<json> one_to(int n) {
  std::vector<json> v;
  for (int i = 1; i <= n; ++i) v.emplace_back(i);
  return v;
}
inline std::vector<json> wide_units() { return {128, 256, 384, 512, 768, 896}; }

inline std::vector<HyperparamGrid> trend_seasonality_grids() {
  return {grid("thetas dim", {json::array({1, 1}), json::array({2, 2}), json::array({3, 3}),
                              json::array({1, 2}), json::array({1, 3}), json::array({2, 3})}),
          grid("hidden layer units", wide_units()),
          grid("stack type", {"trend", "generic", "seasonality"}),
          grid("stack id", {0, 1}),
          grid("number of blocks", one_to(10))};
}

inline std::vector<HyperparamGrid> temporal_graph_conv_grids() {
  return {grid("conv channels", channels()), grid("gcn depth", one_to(5)),
          grid("number of layers", one_to(5)), grid("skip channels", channels()),
          grid("residual channels", channels())};
}

inline std::vector<SolutionSpec> extraction_solutions() {
  return {
      {"FExM1", "Identity Module", {"T1", "T3"}, {}},
      {"FExM2",
       "Temporal Pattern Attention based LSTM",
       {"T2"},
       {grid("number of layers", one_to(5)), grid("number of units", wide_units())}},
      {"FExM3", "Generic Trend and Seasonality Block", {"T4"}, trend_seasonality_grids()},
      {"FExM4", "Temporal Convolutional Layer", {"T5"}, temporal_graph_conv_grids()},
      {"FExM5", "none", {}, {}},
  };
}

inline std::vector<SolutionSpec> enhancement_solutions() {
  return {
      {"FEnM1", "Identity Model", {"T1", "T2", "T4"}, {}},
      {"FEnM2",
       "Residual Block",
       {"T3"},
       {grid("kernel size", {2, 3, 4, 5, 6, 7}), grid("number of filters", {2, 3, 4, 5, 6, 7}),
        grid("dilation base", one_to(5)), grid("weight norm", {true, false}),
        grid("dropout", {0.0, 0.05, 0.1, 0.15, 0.2})}},
      {"FEnM3", "Temporal and Graph Convolution", {"T5"}, temporal_graph_conv_grids()},
  };
}

}  // namespace detail

/// The default five-module catalog over the five source forecasting models,
/// expanded to seven slots by the dual extraction/enhancement channel.
inline std::shared_ptr<const Catalog> default_catalog() {
  using detail::grid;
  static const std::shared_ptr<const Catalog> cat = [] {
    std::vector<Algorithm> algs = {{"T1", "ForecastNet"},
                                   {"T2", "Temporal Pattern Attention"},
                                   {"T3", "Temporal Convolutional Networks"},
                                   {"T4", "N-BEATS"},
                                   {"T5", "MTGNN"}};
    Catalog::SlotSolutions sols;
    sols[slot_index(Slot::IPM)] = {
        {"IPM1", "Identity Module", {"T1", "T2", "T3", "T4"}, {}},
        {"IPM2",
         "Graph Convolutional Network",
         {"T5"},
         {grid("gcn-true", {true, false}), grid("node dim", {10, 20, 30, 40}),
          grid("skip channels", detail::channels()),
          grid("residual channels", detail::channels())}},
    };
    sols[slot_index(Slot::FExM)] = detail::extraction_solutions();
    sols[slot_index(Slot::FExM_add)] = detail::extraction_solutions();
    sols[slot_index(Slot::FEnM)] = detail::enhancement_solutions();
    sols[slot_index(Slot::FEnM_add)] = detail::enhancement_solutions();
    sols[slot_index(Slot::FFM)] = {
        {"FFM1", "Identity Module", {"T1", "T2", "T3", "T4"}, {}},
        {"FFM2", "Skip Connection Module", {"T5"}, {grid("skip channels", detail::channels())}},
    };
    sols[slot_index(Slot::OPM)] = {
        {"OPM1",
         "Dense ForecastNet",
         {"T1"},
         {grid("hidden dim", {24, 36, 48, 60, 72, 84, 96, 128})}},
        {"OPM2", "Fully-Connected Layer", {"T2"}, {grid("opt num units", detail::wide_units())}},
        {"OPM3", "Identity Module", {"T3"}, {}},
        {"OPM4", "Generic Trend and Seasonality Block", {"T4"},
         detail::trend_seasonality_grids()},
        {"OPM5", "Convolutional Layer", {"T5"}, {grid("end channels", detail::channels())}},
    };
    return Catalog::create(std::move(algs), std::move(sols));
  }();
  return cat;
}

inline SearchSpace build_default_space() { return SearchSpace(default_catalog()); }

inline BigInt cardinality(const SearchSpace& space) {
  BigInt n = 1;
  for (Slot s : kSlots) n *= static_cast<unsigned long long>(space.size(s));
  return n;
}

inline const OptionSpec& decode_global(const SearchSpace& space, OptionId id) {
  return space.catalog().option(id);
}

inline ModelCode sample_uniform(const SearchSpace& space, Rng& rng) {
  ModelCode code;
  for (Slot s : kSlots) {
    const auto opts = space.options(s);
    code[s] = opts[static_cast<std::size_t>(rng.index(opts.size()))];
  }
  return code;
}

inline SearchSpace restrict(const SearchSpace& space, const KeepLists& keep) {
  return space.restrict(keep);
}

/// Keeps `per_slot` options per slot at evenly spaced positions of each
/// slot's current list (all of them when the slot is smaller).
inline SearchSpace evenly_spaced_subspace(const SearchSpace& space, std::size_t per_slot) {
  if (per_slot == 0) throw InvalidPruning("per-slot size must be positive");
  KeepLists keep;
  for (Slot s : kSlots) {
    const auto opts = space.options(s);
    const std::size_t n = std::min(per_slot, opts.size());
    for (std::size_t j = 0; j < n; ++j) keep[slot_index(s)].push_back(opts[j * opts.size() / n]);
  }
  return space.restrict(keep);
}

inline SearchSpace load_space_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open space definition " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("space definition " + path + ": " + e.what());
  }
  return SearchSpace(Catalog::from_json(j));
}

inline std::string space_definition_text(const Catalog& catalog) {
  return catalog.to_json().dump(2) + "\n";
}

/// Human-readable form of a code: per slot the solution id, name and the
/// concrete hyperparameter assignment. Without names this is the `code`
/// payload of the external evaluator protocol.
inline json describe(const Catalog& catalog, const ModelCode& code, bool with_names = true) {
  json out = json::object();
  for (Slot s : kSlots) {
    const auto& opt = catalog.option(code[s]);
    const auto& sol = catalog.solution(opt);
    json params = json::object();
    for (std::size_t g = 0; g < sol.grids.size(); ++g)
      params[sol.grids[g].name] = sol.grids[g].values[opt.assignment[g]];
    json entry = {{"solution", sol.id}, {"params", params}};
    if (with_names) entry["name"] = sol.name;
    out[std::string(slot_name(s))] = std::move(entry);
  }
  return out;
}

}  // namespace autots
