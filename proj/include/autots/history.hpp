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

#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "autots/errors.hpp"
#include "autots/search_space.hpp"

namespace autots {

enum class Stage : std::uint8_t { RandomInit, Vertical, Horizontal, Random, Mutation };

constexpr std::string_view stage_name(Stage s) noexcept {
  switch (s) {
    case Stage::RandomInit: return "random-init";
    case Stage::Vertical: return "vertical";
    case Stage::Horizontal: return "horizontal";
    case Stage::Random: return "random";
    case Stage::Mutation: return "mutation";
  }
  return "unknown";
}

inline std::optional<Stage> stage_from_name(std::string_view n) {
  for (Stage s : {Stage::RandomInit, Stage::Vertical, Stage::Horizontal, Stage::Random,
                  Stage::Mutation})
    if (stage_name(s) == n) return s;
  return std::nullopt;
}

struct EvalRecord {
  ModelCode code;
  double rrse = 0.0;
  std::size_t iteration = 0;
  Stage stage = Stage::RandomInit;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

/// The store of evaluated codes: append-only records, a code index for cache
/// hits and the running maximum rrse.
class History {
 public:
  void append(const EvalRecord& r) {
    if (!std::isfinite(r.rrse)) throw PreconditionError("rrse must be finite");
    if (index_.count(r.code))
      throw PreconditionError("code " + to_string(r.code) + " already in history");
    index_.emplace(r.code, records_.size());
    records_.push_back(r);
    if (!p_max_ || r.rrse > *p_max_) p_max_ = r.rrse;
  }

  std::optional<double> lookup(const ModelCode& code) const {
    auto it = index_.find(code);
    if (it == index_.end()) return std::nullopt;
    return records_[it->second].rrse;
  }

  bool contains(const ModelCode& code) const { return index_.count(code) != 0; }

  const std::vector<EvalRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  /// Running maximum rrse; empty for an empty history.
  std::optional<double> p_max() const noexcept { return p_max_; }

  /// Lowest-rrse record (earliest on ties).
  const EvalRecord* best() const {
    const EvalRecord* b = nullptr;
    for (const auto& r : records_)
      if (!b || r.rrse < b->rrse) b = &r;
    return b;
  }

  friend bool operator==(const History& a, const History& b) { return a.records_ == b.records_; }

 private:
  std::vector<EvalRecord> records_;
  std::unordered_map<ModelCode, std::size_t, ModelCodeHash> index_;
  std::optional<double> p_max_;
};

inline json record_to_json(const EvalRecord& r) {
  json j;
  j["iter"] = r.iteration;
  j["stage"] = std::string(stage_name(r.stage));
  j["code"] = code_ids_json(r.code);
  j["rrse"] = r.rrse;
  return j;
}

/// One history line. Key order is fixed: iter, stage, code, rrse.
inline std::string record_line(const EvalRecord& r) {
  nlohmann::ordered_json j;
  j["iter"] = r.iteration;
  j["stage"] = std::string(stage_name(r.stage));
  j["code"] = code_ids_json(r.code);
  j["rrse"] = r.rrse;
  return j.dump();
}

inline EvalRecord record_from_json(const json& j) {
  EvalRecord r;
  r.iteration = j.at("iter").get<std::size_t>();
  const auto stage = stage_from_name(j.at("stage").get<std::string>());
  if (!stage) throw FormatError("unknown stage " + j.at("stage").get<std::string>());
  r.stage = *stage;
  const auto& code = j.at("code");
  if (!code.is_array() || code.size() != kSlotCount)
    throw FormatError("code must list 7 option ids");
  for (std::size_t i = 0; i < kSlotCount; ++i) r.code.ids[i] = code[i].get<OptionId>();
  r.rrse = j.at("rrse").get<double>();
  if (!std::isfinite(r.rrse)) throw FormatError("rrse must be finite");
  return r;
}

/// Writes an optional header line `{"header": {...}}` followed by one record
/// per line.
inline void write_history(std::ostream& out, const History& h, const json* header = nullptr) {
  if (header) out << json{{"header", *header}}.dump() << '\n';
  for (const auto& r : h.records()) out << record_line(r) << '\n';
}

/// Parses history JSONL. A leading `{"header": ...}` line is skipped. Any
/// malformed line is reported with its 1-based line number.
inline History read_history(std::istream& in) {
  History h;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.is_object() && j.contains("header") && j.size() == 1) continue;
      h.append(record_from_json(j));
    } catch (const json::exception& e) {
      throw FormatError("history line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw FormatError("history line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return h;
}

inline void save_history(const std::string& path, const History& h,
                         const json* header = nullptr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  write_history(out, h, header);
}

inline History load_history(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  return read_history(in);
}

/// Best-rrse-so-far after each record.
inline std::vector<double> best_curve(const History& h) {
  std::vector<double> curve;
  curve.reserve(h.size());
  double best = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double v = h.records()[i].rrse;
    best = i == 0 ? v : std::min(best, v);
    curve.push_back(best);
  }
  return curve;
}

}  // namespace autots
