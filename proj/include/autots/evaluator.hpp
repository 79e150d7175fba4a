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

// Performance evaluator: a single-layer LSTM reads the seven option
// embeddings of a code in slot order; an affine head maps the last hidden
// state to a predicted validation rrse.
//
// Parameters live in one flat vector so optimizers, clipping and
// finite-difference checks treat them uniformly:
//
//   [ W (4H x (N+H), column-major) | b (4H) | head_w (H) | head_b (1) ]
//
// Gate order inside W and b is input, forget, cell, output. The first N
// columns of W act on the embedding, the last H on the previous hidden state.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "autots/embedding_table.hpp"
#include "autots/errors.hpp"
#include "autots/history.hpp"
#include "autots/rng.hpp"
#include "autots/search_space.hpp"

namespace autots {

class Evaluator {
 public:
  Evaluator() = default;

  /// Zero-initialized evaluator; predicts 0 for every code.
  Evaluator(std::size_t width, std::size_t hidden)
      : width_(width), hidden_(hidden), params_(Eigen::VectorXd::Zero(param_count(width, hidden))) {
    if (width == 0 || hidden == 0) throw ConfigError("evaluator sizes must be positive");
  }

  /// Uniform in [-1/sqrt(H), 1/sqrt(H)] for every parameter.
  static Evaluator random(std::size_t width, std::size_t hidden, std::uint64_t seed) {
    Evaluator e(width, hidden);
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (Eigen::Index i = 0; i < e.params_.size(); ++i) e.params_[i] = rng.uniform(-bound, bound);
    return e;
  }

  static std::size_t param_count(std::size_t width, std::size_t hidden) {
    return 4 * hidden * (width + hidden) + 4 * hidden + hidden + 1;
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t hidden() const noexcept { return hidden_; }

  Eigen::VectorXd& params() noexcept { return params_; }
  const Eigen::VectorXd& params() const noexcept { return params_; }

  double predict(const EmbeddingTable& table, const ModelCode& code) const {
    return predict_batch(table, std::span<const ModelCode>(&code, 1)).front();
  }

  std::vector<double> predict_batch(const EmbeddingTable& table,
                                    std::span<const ModelCode> codes) const {
    check_table(table);
    std::vector<double> out(codes.size());
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < codes.size(); start += kChunk) {
      const auto chunk = codes.subspan(start, std::min(kChunk, codes.size() - start));
      Forward f = forward(table, chunk, false);
      for (std::size_t b = 0; b < chunk.size(); ++b) out[start + b] = f.y[static_cast<Eigen::Index>(b)];
    }
    return out;
  }

  /// Gradients of the summed squared error over a batch.
  struct Gradient {
    Eigen::VectorXd params;
    // Per distinct option id, d loss / d embedding row.
    std::map<OptionId, Eigen::VectorXd> embeddings;
  };

  /// Returns sum_b (predict(code_b) - target_b)^2 and fills `grad`.
  double loss_and_gradient(const EmbeddingTable& table, std::span<const ModelCode> codes,
                           std::span<const double> targets, Gradient& grad) const {
    check_table(table);
    const std::size_t H = hidden_, N = width_;
    const auto B = static_cast<Eigen::Index>(codes.size());
    Forward f = forward(table, codes, true);

    Eigen::RowVectorXd dy(B);
    double loss = 0.0;
    for (Eigen::Index b = 0; b < B; ++b) {
      const double r = f.y[b] - targets[static_cast<std::size_t>(b)];
      loss += r * r;
      dy[b] = 2.0 * r;
    }

    grad.params = Eigen::VectorXd::Zero(params_.size());
    grad.embeddings.clear();
    auto gW = Eigen::Map<Eigen::MatrixXd>(grad.params.data(), 4 * H, N + H);
    auto gb = grad.params.segment(w_size(), 4 * H);
    auto ghw = grad.params.segment(w_size() + 4 * H, H);
    double& ghb = grad.params[static_cast<Eigen::Index>(w_size() + 5 * H)];

    const auto W = weights();
    const auto Wx = W.leftCols(N);
    const auto Wh = W.rightCols(H);
    const auto hw = head_weights();

    ghw = f.h.back() * dy.transpose();
    ghb = dy.sum();

    Eigen::MatrixXd dh = hw * dy;  // H x B
    Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(H, B);
    Eigen::MatrixXd dz(4 * H, B);
    const auto h_ = static_cast<Eigen::Index>(H);
    for (std::size_t t = kSlotCount; t-- > 0;) {
      const Step& s = f.steps[t];
      const auto& c_prev = f.c[t];
      const auto& h_prev = f.h[t];
      const Eigen::ArrayXXd do_ = dh.array() * s.tanh_c.array();
      dc.array() += dh.array() * s.o.array() * (1.0 - s.tanh_c.array().square());
      dz.topRows(h_) = (dc.array() * s.g.array() * s.i.array() * (1.0 - s.i.array())).matrix();
      dz.middleRows(h_, h_) =
          (dc.array() * c_prev.array() * s.f.array() * (1.0 - s.f.array())).matrix();
      dz.middleRows(2 * h_, h_) = (dc.array() * s.i.array() * (1.0 - s.g.array().square())).matrix();
      dz.bottomRows(h_) = (do_ * s.o.array() * (1.0 - s.o.array())).matrix();
      dc = (dc.array() * s.f.array()).matrix();

      gW.leftCols(N).noalias() += dz * s.x.transpose();
      gW.rightCols(H).noalias() += dz * h_prev.transpose();
      gb += dz.rowwise().sum();

      const Eigen::MatrixXd dx = Wx.transpose() * dz;  // N x B
      dh = Wh.transpose() * dz;
      for (Eigen::Index b = 0; b < B; ++b) {
        const OptionId id = codes[static_cast<std::size_t>(b)].ids[t];
        auto [it, fresh] = grad.embeddings.try_emplace(id);
        if (fresh)
          it->second = dx.col(b);
        else
          it->second += dx.col(b);
      }
    }
    return loss;
  }

  friend bool operator==(const Evaluator& a, const Evaluator& b) {
    return a.width_ == b.width_ && a.hidden_ == b.hidden_ && a.params_ == b.params_;
  }

 private:
  struct Step {
    Eigen::MatrixXd x, i, f, g, o, tanh_c;
  };
  struct Forward {
    std::vector<Step> steps;
    std::vector<Eigen::MatrixXd> h;  // h[0] initial, h[t+1] after step t
    std::vector<Eigen::MatrixXd> c;
    Eigen::RowVectorXd y;
  };

  std::size_t w_size() const noexcept { return 4 * hidden_ * (width_ + hidden_); }

  Eigen::Map<const Eigen::MatrixXd> weights() const {
    return {params_.data(), static_cast<Eigen::Index>(4 * hidden_),
            static_cast<Eigen::Index>(width_ + hidden_)};
  }
  Eigen::Map<const Eigen::VectorXd> bias() const {
    return {params_.data() + w_size(), static_cast<Eigen::Index>(4 * hidden_)};
  }
  Eigen::Map<const Eigen::VectorXd> head_weights() const {
    return {params_.data() + w_size() + 4 * hidden_, static_cast<Eigen::Index>(hidden_)};
  }
  double head_bias() const { return params_[static_cast<Eigen::Index>(w_size() + 5 * hidden_)]; }

  void check_table(const EmbeddingTable& table) const {
    if (table.width() != width_)
      throw ConfigError("embedding width " + std::to_string(table.width()) +
                        " does not match evaluator width " + std::to_string(width_));
  }

  static Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z) { return 1.0 / (1.0 + (-z).exp()); }

  Forward forward(const EmbeddingTable& table, std::span<const ModelCode> codes,
                  bool keep) const {
    const auto H = static_cast<Eigen::Index>(hidden_);
    const auto N = static_cast<Eigen::Index>(width_);
    const auto B = static_cast<Eigen::Index>(codes.size());
    const auto W = weights();
    const auto Wx = W.leftCols(N);
    const auto Wh = W.rightCols(H);
    const auto b = bias();

    Forward f;
    f.h.reserve(kSlotCount + 1);
    f.c.reserve(kSlotCount + 1);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(H, B);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(H, B);
    if (keep) {
      f.h.push_back(h);
      f.c.push_back(c);
    }
    Eigen::MatrixXd x(N, B);
    Eigen::MatrixXd z(4 * H, B);
    for (std::size_t t = 0; t < kSlotCount; ++t) {
      for (Eigen::Index col = 0; col < B; ++col) {
        const auto row = table.row(codes[static_cast<std::size_t>(col)].ids[t]);
        x.col(col) = Eigen::Map<const Eigen::VectorXd>(row.data(), N);
      }
      z.noalias() = Wx * x;
      z.noalias() += Wh * h;
      z.colwise() += b;
      Step s;
      s.i = sigmoid(z.topRows(H).array()).matrix();
      s.f = sigmoid(z.middleRows(H, H).array()).matrix();
      s.g = z.middleRows(2 * H, H).array().tanh().matrix();
      s.o = sigmoid(z.bottomRows(H).array()).matrix();
      c = (s.f.array() * c.array() + s.i.array() * s.g.array()).matrix();
      s.tanh_c = c.array().tanh().matrix();
      h = (s.o.array() * s.tanh_c.array()).matrix();
      if (keep) {
        s.x = x;
        f.steps.push_back(std::move(s));
        f.h.push_back(h);
        f.c.push_back(c);
      }
    }
    f.y = ((head_weights().transpose() * h).array() + head_bias()).matrix();
    if (!keep) f.h.push_back(std::move(h));
    return f;
  }

  std::size_t width_ = 0;
  std::size_t hidden_ = 0;
  Eigen::VectorXd params_;
};

struct EvaluatorTraining {
  double lr = 1e-3;
  std::size_t epochs = 5;
  std::size_t batch = 32;
  double clip = 5.0;
  bool fine_tune_embeddings = true;
};

/// Summed squared error of the evaluator over `records`.
inline double evaluator_loss(const Evaluator& ev, const EmbeddingTable& table,
                             std::span<const EvalRecord> records) {
  std::vector<ModelCode> codes;
  codes.reserve(records.size());
  for (const auto& r : records) codes.push_back(r.code);
  const auto pred = ev.predict_batch(table, codes);
  double loss = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double r = pred[i] - records[i].rrse;
    loss += r * r;
  }
  return loss;
}

/// Minibatch SGD on the squared-error objective, updating the evaluator and
/// (optionally) the embedding rows of options that occur in `records`. The
/// joint gradient is clipped to norm `clip`. Returns the summed training loss
/// of each epoch, accumulated before each minibatch update.
inline std::vector<double> fit_evaluator(Evaluator& ev, EmbeddingTable& table,
                                         std::span<const EvalRecord> records,
                                         const EvaluatorTraining& cfg, Rng& rng) {
  if (records.empty()) throw PreconditionError("cannot fit the evaluator on an empty history");
  if (cfg.batch == 0) throw ConfigError("evaluator batch size must be positive");
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> trace;
  trace.reserve(cfg.epochs);
  std::vector<ModelCode> codes;
  std::vector<double> targets;
  Evaluator::Gradient grad;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      codes.clear();
      targets.clear();
      for (std::size_t j = start; j < end; ++j) {
        codes.push_back(records[order[j]].code);
        targets.push_back(records[order[j]].rrse);
      }
      epoch_loss += ev.loss_and_gradient(table, codes, targets, grad);
      if (cfg.lr == 0.0) continue;

      double norm2 = grad.params.squaredNorm();
      if (cfg.fine_tune_embeddings)
        for (const auto& [id, g] : grad.embeddings) norm2 += g.squaredNorm();
      const double norm = std::sqrt(norm2);
      const double scale = (cfg.clip > 0.0 && norm > cfg.clip) ? cfg.clip / norm : 1.0;

      ev.params() -= (cfg.lr * scale) * grad.params;
      if (cfg.fine_tune_embeddings) {
        for (const auto& [id, g] : grad.embeddings) {
          auto row = table.row(id);
          for (std::size_t j = 0; j < row.size(); ++j)
            row[j] -= cfg.lr * scale * g[static_cast<Eigen::Index>(j)];
        }
      }
    }
    trace.push_back(epoch_loss);
  }
  return trace;
}

}  // namespace autots
