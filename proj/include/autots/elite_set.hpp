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

#include <algorithm>
#include <vector>

#include "autots/errors.hpp"
#include "autots/history.hpp"
#include "autots/rng.hpp"

namespace autots {

/// Ordering of records: ascending rrse, then earlier iteration, then code.
inline bool elite_before(const EvalRecord& a, const EvalRecord& b) {
  if (a.rrse != b.rrse) return a.rrse < b.rrse;
  if (a.iteration != b.iteration) return a.iteration < b.iteration;
  return a.code < b.code;
}

/// The K best records seen so far.
class EliteSet {
 public:
  explicit EliteSet(std::size_t k = 5) : k_(k) {
    if (k == 0) throw ConfigError("elite set size K must be positive");
  }

  void offer(const EvalRecord& r) {
    auto pos = std::upper_bound(entries_.begin(), entries_.end(), r, elite_before);
    if (entries_.size() == k_) {
      if (pos == entries_.end()) return;
      entries_.pop_back();
    }
    entries_.insert(pos, r);
  }

  static EliteSet from_history(const History& h, std::size_t k) {
    EliteSet e(k);
    for (const auto& r : h.records()) e.offer(r);
    return e;
  }

  const EvalRecord& sample(Rng& rng) const {
    if (entries_.empty()) throw PreconditionError("elite set is empty");
    return entries_[rng.index(entries_.size())];
  }

  const EvalRecord& best() const {
    if (entries_.empty()) throw PreconditionError("elite set is empty");
    return entries_.front();
  }

  const std::vector<EvalRecord>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t capacity() const noexcept { return k_; }

 private:
  std::size_t k_;
  std::vector<EvalRecord> entries_;
};

}  // namespace autots
