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

// The learned models shared by both search stages: option embeddings, the
// performance evaluator and the importance predictor, plus their update
// schedule and checkpoint format.
//
// Surrogate checkpoint sections (see embedding_table.hpp for the container):
//
//   LSTW  4H x (N+H)  cell weights, gate blocks i, f, g, o; columns are
//                     [input | recurrent]
//   LSTB  4H x 1      cell bias
//   HEDW  H x 1       head weights
//   HEDB  1 x 1       head bias
//   IMPW  N x 1       importance weights
//   IMPB  1 x 1       importance bias

#include <algorithm>
#include <array>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "autots/embedding_table.hpp"
#include "autots/errors.hpp"
#include "autots/evaluator.hpp"
#include "autots/history.hpp"
#include "autots/importance.hpp"
#include "autots/rng.hpp"

namespace autots {

struct SurrogateConfig {
  std::size_t hidden = 64;
  EvaluatorTraining evaluator;  // epochs = per-evaluation epochs
  std::size_t full_retrain_every = 50;
  std::size_t epochs_full = 50;
  bool reinit_on_full_retrain = false;

  double predictor_lr = 1e-2;
  std::size_t predictor_initial_steps = 100;
  std::size_t predictor_batch = 32;
  double predictor_clip = 5.0;
  std::optional<double> p_max;  // fixed reward ceiling; running max when empty

  void validate() const {
    if (hidden == 0) throw ConfigError("evaluator hidden size must be positive");
    if (evaluator.batch == 0 || predictor_batch == 0) throw ConfigError("batch sizes must be positive");
    if (evaluator.lr < 0.0 || predictor_lr < 0.0) throw ConfigError("learning rates must be non-negative");
  }
};

struct Surrogates {
  EmbeddingTable table;
  Evaluator evaluator;
  ImportancePredictor predictor;
  std::uint64_t seed = 0;
  std::size_t restarts = 0;

  static Surrogates create(EmbeddingTable table, const SurrogateConfig& cfg, std::uint64_t seed) {
    Surrogates s;
    const std::size_t n = table.width();
    s.table = std::move(table);
    s.seed = seed;
    s.evaluator = Evaluator::random(n, cfg.hidden, derive_seed(seed, 0));
    s.predictor = ImportancePredictor::random(n, derive_seed(seed, 1));
    return s;
  }
};

/// Reward ceiling for the predictor objective.
inline double reward_ceiling(const History& h, const SurrogateConfig& cfg) {
  if (cfg.p_max) {
    if (h.p_max() && *h.p_max() > *cfg.p_max)
      throw PreconditionError("configured p_max lies below an observed rrse");
    return *cfg.p_max;
  }
  if (!h.p_max()) throw PreconditionError("reward ceiling needs a non-empty history");
  return *h.p_max();
}

/// Fits the evaluator after a new evaluation: a few epochs over all of the
/// history, or a re-initialized model trained for epochs_full whenever the
/// history size is a multiple of full_retrain_every.
inline void update_evaluator(Surrogates& s, const History& h, const SurrogateConfig& cfg,
                             Rng& rng) {
  if (h.empty()) return;
  EvaluatorTraining t = cfg.evaluator;
  if (cfg.full_retrain_every && h.size() % cfg.full_retrain_every == 0) {
    ++s.restarts;
    if (cfg.reinit_on_full_retrain)
      s.evaluator =
          Evaluator::random(s.table.width(), cfg.hidden, derive_seed(s.seed, 2 + s.restarts));
    t.epochs = cfg.epochs_full;
  }
  fit_evaluator(s.evaluator, s.table, h.records(), t, rng);
}

/// Initial predictor fit: ascent steps over the whole history with the full
/// option sets.
inline void fit_predictor_initial(Surrogates& s, const History& h, const SearchSpace& space,
                                  const SurrogateConfig& cfg) {
  const OptionSets sets = option_sets(space);
  const double p_max = reward_ceiling(h, cfg);
  for (std::size_t i = 0; i < cfg.predictor_initial_steps; ++i)
    reinforce_step(s.predictor, s.table, h.records(), sets, p_max, cfg.predictor_lr,
                   cfg.predictor_clip);
}

/// One ascent step on a batch holding the newest record and up to batch-1
/// other records drawn without replacement.
inline void update_predictor(Surrogates& s, const History& h, const SearchSpace& pruned,
                             const SurrogateConfig& cfg, Rng& rng) {
  if (h.empty()) return;
  const auto& recs = h.records();
  std::vector<EvalRecord> batch;
  batch.push_back(recs.back());
  const std::size_t others = recs.size() - 1;
  const std::size_t want = std::min(cfg.predictor_batch - 1, others);
  if (want == others) {
    batch.insert(batch.end(), recs.begin(), recs.end() - 1);
  } else {
    std::vector<std::size_t> idx(others);
    for (std::size_t i = 0; i < others; ++i) idx[i] = i;
    for (std::size_t i = 0; i < want; ++i) {
      std::swap(idx[i], idx[i + rng.index(others - i)]);
      batch.push_back(recs[idx[i]]);
    }
  }
  reinforce_step(s.predictor, s.table, batch, option_sets(pruned), reward_ceiling(h, cfg),
                 cfg.predictor_lr, cfg.predictor_clip);
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace detail {

inline void put_section(std::ostream& out, const char (&tag)[5], std::size_t rows, std::size_t cols,
                        const double* row_major) {
  out.write(tag, 4);
  binio::put_u32(out, static_cast<std::uint32_t>(rows));
  binio::put_u32(out, static_cast<std::uint32_t>(cols));
  for (std::size_t i = 0; i < rows * cols; ++i) binio::put_f64(out, row_major[i]);
}

}  // namespace detail

inline void write_surrogate_checkpoint(std::ostream& out, const Evaluator& ev,
                                       const ImportancePredictor& p) {
  const std::size_t N = ev.width(), H = ev.hidden();
  if (p.width() != N) throw ConfigError("evaluator and predictor widths differ");
  binio::put_header(out, {static_cast<std::uint32_t>(N), 0});
  binio::put_u32(out, 6);
  const auto& v = ev.params();
  const std::size_t R = 4 * H, C = N + H;
  std::vector<double> w(R * C);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) w[r * C + c] = v[static_cast<Eigen::Index>(c * R + r)];
  detail::put_section(out, "LSTW", R, C, w.data());
  detail::put_section(out, "LSTB", R, 1, v.data() + R * C);
  detail::put_section(out, "HEDW", H, 1, v.data() + R * C + R);
  detail::put_section(out, "HEDB", 1, 1, v.data() + R * C + R + H);
  detail::put_section(out, "IMPW", N, 1, p.params().data());
  detail::put_section(out, "IMPB", 1, 1, p.params().data() + N);
}

struct SurrogateCheckpoint {
  Evaluator evaluator;
  ImportancePredictor predictor;
};

inline SurrogateCheckpoint read_surrogate_checkpoint(std::istream& in) {
  const auto h = binio::get_header(in);
  if (h.width == 0 || h.rows != 0) throw FormatError("not a surrogate checkpoint");
  const std::size_t N = h.width;
  if (binio::get_u32(in) != 6) throw FormatError("surrogate checkpoint must have 6 sections");

  auto section = [&](const char* tag, std::size_t rows_hint) {
    std::array<char, 4> t{};
    if (!in.read(t.data(), 4) || std::string(t.data(), 4) != tag)
      throw FormatError(std::string("expected section ") + tag);
    const std::size_t rows = binio::get_u32(in), cols = binio::get_u32(in);
    if (rows_hint && rows != rows_hint)
      throw FormatError(std::string("section ") + tag + " has unexpected shape");
    std::vector<double> data(rows * cols);
    for (double& d : data) d = binio::get_f64(in);
    return std::make_pair(std::make_pair(rows, cols), std::move(data));
  };

  auto [wshape, w] = section("LSTW", 0);
  const std::size_t R = wshape.first, C = wshape.second;
  if (R % 4 || R == 0 || C != N + R / 4) throw FormatError("section LSTW has unexpected shape");
  const std::size_t H = R / 4;
  auto [bshape, b] = section("LSTB", R);
  auto [hwshape, hw] = section("HEDW", H);
  auto [hbshape, hb] = section("HEDB", 1);
  auto [iwshape, iw] = section("IMPW", N);
  auto [ibshape, ib] = section("IMPB", 1);
  if (bshape.second != 1 || hwshape.second != 1 || hbshape.second != 1 || iwshape.second != 1 ||
      ibshape.second != 1)
    throw FormatError("surrogate section must be a column");
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in checkpoint");

  SurrogateCheckpoint ck{Evaluator(N, H), ImportancePredictor(N)};
  auto& v = ck.evaluator.params();
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) v[static_cast<Eigen::Index>(c * R + r)] = w[r * C + c];
  std::copy(b.begin(), b.end(), v.data() + R * C);
  std::copy(hw.begin(), hw.end(), v.data() + R * C + R);
  v[static_cast<Eigen::Index>(R * C + R + H)] = hb[0];
  std::copy(iw.begin(), iw.end(), ck.predictor.params().data());
  ck.predictor.params()[static_cast<Eigen::Index>(N)] = ib[0];
  return ck;
}

inline void save_surrogates(const std::string& path, const Evaluator& ev,
                            const ImportancePredictor& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  write_surrogate_checkpoint(out, ev, p);
}

inline SurrogateCheckpoint load_surrogates(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  return read_surrogate_checkpoint(in);
}

}  // namespace autots
