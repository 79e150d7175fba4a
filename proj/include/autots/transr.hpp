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

// TransR embedding of the option knowledge graph.
//
// score(h, r, t) = || W_r e_h + e_r - W_r e_t ||^2, trained with the margin
// ranking loss  max(0, margin + score(pos) - score(neg))  by plain SGD, one
// triplet at a time. Negatives corrupt the head or the tail (fair coin) with
// a uniformly drawn entity of the same kind, rejecting corruptions that are
// themselves facts of the graph. Entity vectors are projected back into the
// unit ball after every step.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "autots/embedding_table.hpp"
#include "autots/errors.hpp"
#include "autots/knowledge_graph.hpp"
#include "autots/rng.hpp"

namespace autots {

struct TransRConfig {
  std::size_t d = 32;
  std::size_t k = 32;
  double margin = 1.0;
  double lr = 0.01;
  std::size_t epochs = 200;
  std::size_t neg_per_pos = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (d < 1 || k < 1) throw ConfigError("TransR dimensions must be positive");
    if (!(margin > 0.0)) throw ConfigError("TransR margin must be positive");
    if (!(lr >= 0.0)) throw ConfigError("TransR learning rate must be non-negative");
    if (neg_per_pos < 1) throw ConfigError("TransR needs at least one negative per positive");
  }
};

class TransRModel {
 public:
  TransRModel() = default;
  TransRModel(std::size_t entities, std::size_t d, std::size_t k, double margin)
      : d_(d),
        k_(k),
        margin_(margin),
        entity_(entities * d, 0.0),
        relation_(kRelationCount * k, 0.0),
        matrix_(kRelationCount * k * d, 0.0) {}

  std::size_t d() const noexcept { return d_; }
  std::size_t k() const noexcept { return k_; }
  double margin() const noexcept { return margin_; }
  std::size_t entity_count() const noexcept { return d_ ? entity_.size() / d_ : 0; }

  std::span<double> entity(EntityId e) { return {entity_.data() + std::size_t{e} * d_, d_}; }
  std::span<const double> entity(EntityId e) const {
    return {entity_.data() + std::size_t{e} * d_, d_};
  }
  std::span<double> relation(Relation r) {
    return {relation_.data() + static_cast<std::size_t>(r) * k_, k_};
  }
  std::span<const double> relation(Relation r) const {
    return {relation_.data() + static_cast<std::size_t>(r) * k_, k_};
  }
  /// W_r, k x d row-major.
  std::span<double> matrix(Relation r) {
    return {matrix_.data() + static_cast<std::size_t>(r) * k_ * d_, k_ * d_};
  }
  std::span<const double> matrix(Relation r) const {
    return {matrix_.data() + static_cast<std::size_t>(r) * k_ * d_, k_ * d_};
  }

  /// Mean hinge loss per positive, one value per completed epoch.
  std::vector<double> loss_trace;

  bool all_finite() const {
    auto ok = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return ok(entity_) && ok(relation_) && ok(matrix_);
  }

  friend bool operator==(const TransRModel&, const TransRModel&) = default;

 private:
  std::size_t d_ = 0;
  std::size_t k_ = 0;
  double margin_ = 1.0;
  std::vector<double> entity_;
  std::vector<double> relation_;
  std::vector<double> matrix_;
};

namespace detail {

// u = W_r (e_h - e_t) + e_r; returns ||u||^2. `diff` receives e_h - e_t.
inline double translation_residual(const TransRModel& m, const Triplet& t, std::span<double> diff,
                                   std::span<double> u) {
  const auto eh = m.entity(t.head);
  const auto et = m.entity(t.tail);
  const auto w = m.matrix(t.relation);
  const auto er = m.relation(t.relation);
  const std::size_t d = m.d(), k = m.k();
  for (std::size_t j = 0; j < d; ++j) diff[j] = eh[j] - et[j];
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double* row = w.data() + i * d;
    double acc = er[i];
    for (std::size_t j = 0; j < d; ++j) acc += row[j] * diff[j];
    u[i] = acc;
    s += acc * acc;
  }
  return s;
}

}  // namespace detail

inline double score(const TransRModel& m, const Triplet& t) {
  std::vector<double> diff(m.d()), u(m.k());
  return detail::translation_residual(m, t, diff, u);
}

/// Analytic gradient of score() with respect to every parameter it touches.
struct ScoreGradient {
  std::vector<double> head;      // d
  std::vector<double> tail;      // d
  std::vector<double> relation;  // k
  std::vector<double> matrix;    // k x d row-major
};

inline ScoreGradient score_gradient(const TransRModel& m, const Triplet& t) {
  const std::size_t d = m.d(), k = m.k();
  std::vector<double> diff(d), u(k);
  detail::translation_residual(m, t, diff, u);
  ScoreGradient g{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0),
                  std::vector<double>(k), std::vector<double>(k * d)};
  const auto w = m.matrix(t.relation);
  for (std::size_t i = 0; i < k; ++i) {
    g.relation[i] = 2.0 * u[i];
    for (std::size_t j = 0; j < d; ++j) {
      g.head[j] += 2.0 * w[i * d + j] * u[i];
      g.matrix[i * d + j] = 2.0 * u[i] * diff[j];
    }
  }
  for (std::size_t j = 0; j < d; ++j) g.tail[j] = -g.head[j];
  return g;
}

/// Seeded initialization: entity and relation vectors uniform in
/// [-6/sqrt(d), 6/sqrt(d)] (relations use sqrt(k)), entities projected into
/// the unit ball, W_r the k x d identity (truncated or zero padded).
inline TransRModel init_transr(std::size_t entity_count, const TransRConfig& cfg) {
  cfg.validate();
  TransRModel m(entity_count, cfg.d, cfg.k, cfg.margin);
  Rng rng(derive_seed(cfg.seed, 0x7472616e73ULL));
  const double eb = 6.0 / std::sqrt(static_cast<double>(cfg.d));
  for (std::size_t e = 0; e < entity_count; ++e) {
    auto v = m.entity(static_cast<EntityId>(e));
    for (double& x : v) x = rng.uniform(-eb, eb);
    project_to_unit_ball(v);
  }
  const double rb = 6.0 / std::sqrt(static_cast<double>(cfg.k));
  for (std::size_t r = 0; r < kRelationCount; ++r) {
    for (double& x : m.relation(static_cast<Relation>(r))) x = rng.uniform(-rb, rb);
    auto w = m.matrix(static_cast<Relation>(r));
    for (std::size_t i = 0; i < std::min(cfg.k, cfg.d); ++i) w[i * cfg.d + i] = 1.0;
  }
  return m;
}

namespace detail {

inline Triplet corrupt(const KnowledgeGraph& kg, const Triplet& pos, Rng& rng) {
  const auto [hk, tk] = relation_signature(pos.relation);
  const bool head_side = rng.bernoulli(0.5);
  const auto pool = kg.entities_of(head_side ? hk : tk);
  Triplet neg = pos;
  constexpr int kMaxTries = 32;
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    const EntityId pick = pool[static_cast<std::size_t>(rng.index(pool.size()))];
    (head_side ? neg.head : neg.tail) = pick;
    if (!(neg == pos) && !kg.contains(neg)) return neg;
  }
  // The filter could not be satisfied (tiny pools); fall back to an unfiltered
  // corruption, or the positive itself, which contributes zero gradient.
  return neg;
}

}  // namespace detail

/// Trains on `training` (all graph triplets when empty). Deterministic for a
/// fixed config and graph.
inline TransRModel train_transr(const KnowledgeGraph& kg, const TransRConfig& cfg,
                                std::span<const Triplet> training = {}) {
  cfg.validate();
  if (kg.triplets().empty()) throw PreconditionError("cannot embed an empty knowledge graph");
  if (training.empty()) training = kg.triplets();

  TransRModel m = init_transr(kg.entities().size(), cfg);
  Rng rng(derive_seed(cfg.seed, 0x73676473ULL));
  const std::size_t d = cfg.d, k = cfg.k;

  std::vector<std::size_t> order(training.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> diff_p(d), u_p(k), diff_n(d), u_n(k), wt_p(d), wt_n(d);
  struct Touch {
    EntityId id;
    std::vector<double> grad;
  };
  std::array<Touch, 4> touched;
  for (auto& t : touched) t.grad.assign(d, 0.0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      const Triplet& pos = training[idx];
      for (std::size_t n = 0; n < cfg.neg_per_pos; ++n) {
        const Triplet neg = detail::corrupt(kg, pos, rng);
        const double sp = detail::translation_residual(m, pos, diff_p, u_p);
        const double sn = detail::translation_residual(m, neg, diff_n, u_n);
        const double loss = cfg.margin + sp - sn;
        if (loss <= 0.0) continue;
        epoch_loss += loss;

        auto w = m.matrix(pos.relation);
        // wt = W^T u
        std::fill(wt_p.begin(), wt_p.end(), 0.0);
        std::fill(wt_n.begin(), wt_n.end(), 0.0);
        for (std::size_t i = 0; i < k; ++i) {
          const double* row = w.data() + i * d;
          for (std::size_t j = 0; j < d; ++j) {
            wt_p[j] += row[j] * u_p[i];
            wt_n[j] += row[j] * u_n[i];
          }
        }

        std::size_t n_touched = 0;
        auto accumulate = [&](EntityId id, const std::vector<double>& g, double sign) {
          std::size_t slot = 0;
          while (slot < n_touched && touched[slot].id != id) ++slot;
          if (slot == n_touched) {
            touched[slot].id = id;
            std::fill(touched[slot].grad.begin(), touched[slot].grad.end(), 0.0);
            ++n_touched;
          }
          for (std::size_t j = 0; j < d; ++j) touched[slot].grad[j] += sign * 2.0 * g[j];
        };
        accumulate(pos.head, wt_p, 1.0);
        accumulate(pos.tail, wt_p, -1.0);
        accumulate(neg.head, wt_n, -1.0);
        accumulate(neg.tail, wt_n, 1.0);

        // Relation parameters.
        auto er = m.relation(pos.relation);
        for (std::size_t i = 0; i < k; ++i) {
          er[i] -= cfg.lr * 2.0 * (u_p[i] - u_n[i]);
          double* row = w.data() + i * d;
          const double a = 2.0 * u_p[i], b = 2.0 * u_n[i];
          for (std::size_t j = 0; j < d; ++j)
            row[j] -= cfg.lr * (a * diff_p[j] - b * diff_n[j]);
        }
        for (std::size_t s = 0; s < n_touched; ++s) {
          auto e = m.entity(touched[s].id);
          for (std::size_t j = 0; j < d; ++j) e[j] -= cfg.lr * touched[s].grad[j];
          project_to_unit_ball(e);
        }
      }
    }
    m.loss_trace.push_back(epoch_loss /
                           static_cast<double>(order.size() * cfg.neg_per_pos));
  }
  return m;
}

/// Option rows of the trained model, indexed by global option id. Options the
/// graph does not cover (outside a restricted space) get seeded random rows.
inline EmbeddingTable export_option_embeddings(const TransRModel& m, const KnowledgeGraph& kg,
                                               const SearchSpace& space, std::size_t width,
                                               std::uint64_t fallback_seed = 0) {
  if (width != m.d())
    throw ConfigError("embedding width " + std::to_string(width) +
                      " does not match TransR entity dimension " + std::to_string(m.d()));
  EmbeddingTable table =
      random_embedding_table(width, space.catalog().option_count(), fallback_seed);
  for (std::size_t g = 0; g < table.rows(); ++g) {
    if (auto e = kg.option_entity(static_cast<OptionId>(g))) {
      const auto src = m.entity(*e);
      std::copy(src.begin(), src.end(), table.row(g).begin());
    }
  }
  return table;
}

}  // namespace autots
