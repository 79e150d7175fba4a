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

// Option-importance predictor and its policy-gradient training.
//
// score(o) = softplus(w . e_o + b) + 1e-6 is strictly positive. For a record
// with code (o_1..o_7) and reward R = p_max - rrse the objective term is
//
//   R * log( (1/7) * sum_i score(o_i) / sum_{o' in set_i} score(o') )
//
// where set_i is the full or pruned option set of slot i. A record option
// missing from its pruned set is added to that set's denominator for the
// step, keeping every ratio in (0, 1].

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "autots/embedding_table.hpp"
#include "autots/errors.hpp"
#include "autots/history.hpp"
#include "autots/rng.hpp"
#include "autots/search_space.hpp"

namespace autots {

inline constexpr double kImportanceFloor = 1e-6;

inline double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

class ImportancePredictor {
 public:
  ImportancePredictor() = default;
  explicit ImportancePredictor(std::size_t width) : params_(Eigen::VectorXd::Zero(width + 1)) {}

  static ImportancePredictor random(std::size_t width, std::uint64_t seed) {
    ImportancePredictor p(width);
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(width));
    for (Eigen::Index i = 0; i < p.params_.size(); ++i) p.params_[i] = rng.uniform(-bound, bound);
    return p;
  }

  std::size_t width() const noexcept {
    return params_.size() ? static_cast<std::size_t>(params_.size() - 1) : 0;
  }

  /// [w (N) | b]
  Eigen::VectorXd& params() noexcept { return params_; }
  const Eigen::VectorXd& params() const noexcept { return params_; }

  double logit(std::span<const double> e) const {
    double z = params_[params_.size() - 1];
    for (std::size_t j = 0; j < e.size(); ++j) z += params_[static_cast<Eigen::Index>(j)] * e[j];
    return z;
  }

  double score(std::span<const double> e) const { return softplus(logit(e)) + kImportanceFloor; }

  /// d score / d params.
  void score_gradient(std::span<const double> e, double scale, Eigen::VectorXd& out) const {
    const double s = logistic(logit(e)) * scale;
    for (std::size_t j = 0; j < e.size(); ++j) out[static_cast<Eigen::Index>(j)] += s * e[j];
    out[out.size() - 1] += s;
  }

  friend bool operator==(const ImportancePredictor& a, const ImportancePredictor& b) {
    return a.params_ == b.params_;
  }

 private:
  Eigen::VectorXd params_;
};

inline double importance(const ImportancePredictor& p, const EmbeddingTable& table, OptionId id) {
  if (table.width() != p.width()) throw ConfigError("predictor width does not match embeddings");
  return p.score(table.row(id));
}

using OptionSets = std::array<std::vector<OptionId>, kSlotCount>;

inline OptionSets option_sets(const SearchSpace& space) { return space.keep_lists(); }

/// Objective from raw scores. `record_scores[i]` is the score of the record's
/// slot-i option; `set_sums[i]` the denominator for slot i (already including
/// the record option when it is outside the set).
inline double mixture_log_probability(std::span<const double, kSlotCount> record_scores,
                                      std::span<const double, kSlotCount> set_sums) {
  double q = 0.0;
  for (std::size_t i = 0; i < kSlotCount; ++i) q += record_scores[i] / set_sums[i];
  return std::log(q / static_cast<double>(kSlotCount));
}

struct ReinforceResult {
  double objective = 0.0;
  Eigen::VectorXd gradient;  // ascent direction, same layout as params()
};

/// Objective and analytic gradient over `records` with per-slot option sets.
inline ReinforceResult reinforce_objective(const ImportancePredictor& p,
                                           const EmbeddingTable& table,
                                           std::span<const EvalRecord> records,
                                           const OptionSets& sets, double p_max) {
  if (table.width() != p.width()) throw ConfigError("predictor width does not match embeddings");
  const auto P = static_cast<Eigen::Index>(p.width() + 1);
  ReinforceResult res;
  res.gradient = Eigen::VectorXd::Zero(P);

  std::array<double, kSlotCount> sum{};
  std::array<Eigen::VectorXd, kSlotCount> dsum;
  for (std::size_t i = 0; i < kSlotCount; ++i) {
    if (sets[i].empty())
      throw PreconditionError("option set of slot " + std::string(slot_name(kSlots[i])) +
                              " is empty");
    dsum[i] = Eigen::VectorXd::Zero(P);
    for (OptionId o : sets[i]) {
      const auto e = table.row(o);
      sum[i] += p.score(e);
      p.score_gradient(e, 1.0, dsum[i]);
    }
  }

  Eigen::VectorXd ds(P), dq(P), dS(P);
  for (const auto& r : records) {
    const double reward = p_max - r.rrse;
    if (reward < 0.0) throw PreconditionError("p_max below a record's rrse");
    double q = 0.0;
    dq.setZero();
    for (std::size_t i = 0; i < kSlotCount; ++i) {
      const OptionId o = r.code.ids[i];
      const auto e = table.row(o);
      const double s = p.score(e);
      ds.setZero();
      p.score_gradient(e, 1.0, ds);
      double S = sum[i];
      dS = dsum[i];
      if (!std::binary_search(sets[i].begin(), sets[i].end(), o)) {
        S += s;
        dS += ds;
      }
      q += s / S;
      dq += ds / S - (s / (S * S)) * dS;
    }
    q /= static_cast<double>(kSlotCount);
    dq /= static_cast<double>(kSlotCount);
    res.objective += reward * std::log(q);
    if (reward != 0.0) res.gradient += (reward / q) * dq;
  }
  return res;
}

/// One clipped gradient-ascent step. Returns the objective before the step.
inline double reinforce_step(ImportancePredictor& p, const EmbeddingTable& table,
                             std::span<const EvalRecord> records, const OptionSets& sets,
                             double p_max, double lr, double clip = 5.0) {
  auto res = reinforce_objective(p, table, records, sets, p_max);
  const double norm = res.gradient.norm();
  const double scale = (clip > 0.0 && norm > clip) ? clip / norm : 1.0;
  p.params() += (lr * scale) * res.gradient;
  return res.objective;
}

/// Size of a pruned slot: max(2, ceil(gamma * n)), never more than n. The
/// product is snapped to the nearest integer when within 1e-9 so that
/// e.g. 0.2 * 5 keeps exactly one ceiling step.
inline std::size_t pruned_size(std::size_t n, double gamma) {
  const double x = gamma * static_cast<double>(n);
  const double r = std::round(x);
  const auto c = static_cast<std::size_t>(std::abs(x - r) < 1e-9 ? r : std::ceil(x));
  return std::min(n, std::max<std::size_t>(2, c));
}

/// Keeps, per slot, the pruned_size() options with the highest importance
/// (ties to lower id).
inline SearchSpace prune_space(const ImportancePredictor& p, const EmbeddingTable& table,
                               const SearchSpace& space, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("prune ratio must lie in (0, 1]");
  KeepLists keep;
  std::vector<std::pair<double, OptionId>> scored;
  for (Slot s : kSlots) {
    const auto opts = space.options(s);
    scored.clear();
    for (OptionId o : opts) scored.emplace_back(importance(p, table, o), o);
    const std::size_t n = pruned_size(opts.size(), gamma);
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n),
                      scored.end(), [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    auto& k = keep[slot_index(s)];
    for (std::size_t j = 0; j < n; ++j) k.push_back(scored[j].second);
    std::sort(k.begin(), k.end());
  }
  return space.restrict(keep);
}

}  // namespace autots
