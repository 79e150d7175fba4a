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

#include "autots/evaluator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "autots/backend.hpp"
#include "test_util.hpp"

namespace autots {
namespace {

// Scalar reference LSTM written directly from the parameter layout, with no
// shared code paths. W is column-major 4H x (N+H).
double reference_predict(const Evaluator& ev, const EmbeddingTable& table, const ModelCode& code) {
  const std::size_t N = ev.width(), H = ev.hidden();
  const auto& p = ev.params();
  const std::size_t rows = 4 * H;
  auto W = [&](std::size_t r, std::size_t c) { return p[static_cast<Eigen::Index>(c * rows + r)]; };
  const std::size_t b0 = rows * (N + H);
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  std::vector<double> h(H, 0.0), c(H, 0.0), z(rows);
  for (std::size_t t = 0; t < kSlotCount; ++t) {
    const auto x = table.row(code.ids[t]);
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = p[static_cast<Eigen::Index>(b0 + r)];
      for (std::size_t j = 0; j < N; ++j) acc += W(r, j) * x[j];
      for (std::size_t j = 0; j < H; ++j) acc += W(r, N + j) * h[j];
      z[r] = acc;
    }
    for (std::size_t u = 0; u < H; ++u) {
      const double i = sig(z[u]), f = sig(z[H + u]), g = std::tanh(z[2 * H + u]),
                   o = sig(z[3 * H + u]);
      c[u] = f * c[u] + i * g;
      h[u] = o * std::tanh(c[u]);
    }
  }
  double y = p[static_cast<Eigen::Index>(b0 + rows + H)];
  for (std::size_t u = 0; u < H; ++u) y += p[static_cast<Eigen::Index>(b0 + rows + u)] * h[u];
  return y;
}

class EvaluatorFixture : public ::testing::Test {
 protected:
  EvaluatorFixture()
      : space_(testing::uniform_catalog(5)),
        table_(random_embedding_table(6, space_.total_options(), 3)),
        ev_(Evaluator::random(6, 4, 9)) {
    Rng rng(12);
    for (int i = 0; i < 5; ++i) codes_.push_back(sample_uniform(space_, rng));
    for (int i = 0; i < 5; ++i) targets_.push_back(0.3 + 0.1 * i);
  }
  SearchSpace space_;
  EmbeddingTable table_;
  Evaluator ev_;
  std::vector<ModelCode> codes_;
  std::vector<double> targets_;
};

TEST_F(EvaluatorFixture, ParamCountAndZeroInit) {
  EXPECT_EQ(Evaluator::param_count(6, 4), 4u * 4 * 10 + 16 + 4 + 1);
  const Evaluator zero(6, 4);
  EXPECT_EQ(zero.predict(table_, codes_[0]), 0.0);
  EXPECT_THROW(Evaluator(0, 4), ConfigError);
}

TEST_F(EvaluatorFixture, ForwardMatchesScalarReference) {
  const auto batch = ev_.predict_batch(table_, codes_);
  for (std::size_t b = 0; b < codes_.size(); ++b)
    EXPECT_NEAR(batch[b], reference_predict(ev_, table_, codes_[b]), 1e-12);
}

TEST_F(EvaluatorFixture, BatchingDoesNotChangePredictions) {
  Rng rng(4);
  std::vector<ModelCode> many;
  for (int i = 0; i < 600; ++i) many.push_back(sample_uniform(space_, rng));
  const auto all = ev_.predict_batch(table_, many);
  for (std::size_t i = 0; i < many.size(); i += 37)
    EXPECT_NEAR(all[i], ev_.predict(table_, many[i]), 1e-12);
}

TEST_F(EvaluatorFixture, WidthMismatchThrows) {
  const auto other = random_embedding_table(5, space_.total_options(), 1);
  EXPECT_THROW(ev_.predict(other, codes_[0]), ConfigError);
}

TEST_F(EvaluatorFixture, ParameterGradientMatchesFiniteDifferences) {
  Evaluator::Gradient g;
  const double loss = ev_.loss_and_gradient(table_, codes_, targets_, g);
  double direct = 0;
  for (std::size_t b = 0; b < codes_.size(); ++b)
    direct += std::pow(reference_predict(ev_, table_, codes_[b]) - targets_[b], 2);
  EXPECT_NEAR(loss, direct, 1e-12);

  auto objective = [&](const Evaluator& e) {
    double s = 0;
    for (std::size_t b = 0; b < codes_.size(); ++b)
      s += std::pow(reference_predict(e, table_, codes_[b]) - targets_[b], 2);
    return s;
  };
  const double h = 1e-6;
  Evaluator e = ev_;
  for (Eigen::Index i = 0; i < e.params().size(); ++i) {
    const double keep = e.params()[i];
    e.params()[i] = keep + h;
    const double up = objective(e);
    e.params()[i] = keep - h;
    const double down = objective(e);
    e.params()[i] = keep;
    const double num = (up - down) / (2 * h);
    const double an = g.params[i];
    ASSERT_LE(std::abs(num - an), 1e-6 + 1e-4 * (std::abs(num) + std::abs(an))) << i;
  }
}

TEST_F(EvaluatorFixture, EmbeddingGradientMatchesFiniteDifferences) {
  Evaluator::Gradient g;
  ev_.loss_and_gradient(table_, codes_, targets_, g);
  std::set<OptionId> used;
  for (const auto& c : codes_) used.insert(c.ids.begin(), c.ids.end());
  ASSERT_EQ(g.embeddings.size(), used.size());

  EmbeddingTable t = table_;
  auto objective = [&] {
    double s = 0;
    for (std::size_t b = 0; b < codes_.size(); ++b)
      s += std::pow(reference_predict(ev_, t, codes_[b]) - targets_[b], 2);
    return s;
  };
  const double h = 1e-6;
  for (const auto& [id, grad] : g.embeddings) {
    auto row = t.row(id);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double keep = row[j];
      row[j] = keep + h;
      const double up = objective();
      row[j] = keep - h;
      const double down = objective();
      row[j] = keep;
      const double num = (up - down) / (2 * h);
      const double an = grad[static_cast<Eigen::Index>(j)];
      ASSERT_LE(std::abs(num - an), 1e-6 + 1e-4 * (std::abs(num) + std::abs(an))) << id;
    }
  }
}

std::vector<EvalRecord> records_for(const std::vector<ModelCode>& codes,
                                    const std::vector<double>& targets) {
  std::vector<EvalRecord> out;
  for (std::size_t i = 0; i < codes.size(); ++i) out.push_back({codes[i], targets[i], i, Stage::Vertical});
  return out;
}

TEST_F(EvaluatorFixture, FitReducesLoss) {
  Rng rng(1);
  std::vector<ModelCode> codes;
  std::vector<double> targets;
  SyntheticOracle oracle;
  for (int i = 0; i < 60; ++i) {
    codes.push_back(sample_uniform(space_, rng));
    targets.push_back(oracle.noiseless(codes.back()));
  }
  const auto recs = records_for(codes, targets);
  Evaluator e = ev_;
  EmbeddingTable t = table_;
  const double before = evaluator_loss(e, t, recs);
  EvaluatorTraining cfg;
  cfg.lr = 1e-2;
  cfg.epochs = 200;
  const auto trace = fit_evaluator(e, t, recs, cfg, rng);
  ASSERT_EQ(trace.size(), 200u);
  EXPECT_LT(evaluator_loss(e, t, recs), 0.2 * before);
}

TEST_F(EvaluatorFixture, SinglePointFitConverges) {
  const std::vector<EvalRecord> one = {{codes_[0], 0.7, 0, Stage::RandomInit}};
  Evaluator e = ev_;
  EmbeddingTable t = table_;
  EvaluatorTraining cfg;
  cfg.lr = 1e-2;
  cfg.epochs = 3000;
  Rng rng(6);
  fit_evaluator(e, t, one, cfg, rng);
  EXPECT_NEAR(e.predict(t, codes_[0]), 0.7, 1e-3);
}

TEST_F(EvaluatorFixture, ZeroLearningRateChangesNothing) {
  const auto recs = records_for(codes_, targets_);
  Evaluator e = ev_;
  EmbeddingTable t = table_;
  EvaluatorTraining cfg;
  cfg.lr = 0.0;
  cfg.epochs = 3;
  Rng rng(7);
  const auto trace = fit_evaluator(e, t, recs, cfg, rng);
  EXPECT_EQ(e, ev_);
  EXPECT_EQ(t, table_);
  EXPECT_NEAR(trace[0], trace[2], 1e-12);
  EXPECT_EQ(ev_.predict(table_, codes_[1]), ev_.predict(table_, codes_[1]));
}

TEST_F(EvaluatorFixture, FrozenEmbeddingsStayPut) {
  const auto recs = records_for(codes_, targets_);
  Evaluator e = ev_;
  EmbeddingTable t = table_;
  EvaluatorTraining cfg;
  cfg.fine_tune_embeddings = false;
  Rng rng(2);
  fit_evaluator(e, t, recs, cfg, rng);
  EXPECT_EQ(t, table_);
  EXPECT_FALSE(e == ev_);

  cfg.fine_tune_embeddings = true;
  fit_evaluator(e, t, recs, cfg, rng);
  EXPECT_FALSE(t == table_);
}

TEST_F(EvaluatorFixture, ClippedStepIsBounded) {
  // With lr 1 and clip c the joint update norm is at most c.
  std::vector<double> far(codes_.size(), 100.0);
  const auto recs = records_for(codes_, far);
  Evaluator e = ev_;
  EmbeddingTable t = table_;
  EvaluatorTraining cfg;
  cfg.lr = 1.0;
  cfg.clip = 0.5;
  cfg.epochs = 1;
  cfg.batch = 64;
  Rng rng(3);
  fit_evaluator(e, t, recs, cfg, rng);
  double n2 = (e.params() - ev_.params()).squaredNorm();
  for (std::size_t i = 0; i < t.data().size(); ++i) n2 += std::pow(t.data()[i] - table_.data()[i], 2);
  EXPECT_NEAR(std::sqrt(n2), 0.5, 1e-9);
}

TEST_F(EvaluatorFixture, FitIsSeededAndRejectsBadInput) {
  const auto recs = records_for(codes_, targets_);
  Evaluator a = ev_, b = ev_;
  EmbeddingTable ta = table_, tb = table_;
  Rng ra(5), rb(5);
  fit_evaluator(a, ta, recs, {}, ra);
  fit_evaluator(b, tb, recs, {}, rb);
  EXPECT_EQ(a, b);
  EXPECT_EQ(ta, tb);
  EXPECT_THROW(fit_evaluator(a, ta, std::span<const EvalRecord>{}, {}, ra), PreconditionError);
  EvaluatorTraining bad;
  bad.batch = 0;
  EXPECT_THROW(fit_evaluator(a, ta, recs, bad, ra), ConfigError);
}

}  // namespace
}  // namespace autots
