// Copyright 2026 The gmslm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gmslm/lm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gmslm::ulm {

void ContextPolicy::validate() const {
  require(window == kUnlimited || window >= 1, Errc::invalid_argument,
          "context window must be >= 1 or unlimited");
  require(keep_first >= 0, Errc::invalid_argument, "keep_first must be >= 0");
}

std::string ContextPolicy::label() const {
  return (unlimited() ? std::string("full") : std::to_string(window)) + "/keep" +
         std::to_string(keep_first);
}

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double ppl(const SequenceScorer& model, const std::vector<units::UnitSequence>& corpus,
           const ContextPolicy& cp) {
  require(!corpus.empty(), Errc::invalid_argument, "perplexity needs a non-empty corpus");
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& seq : corpus) {
    total += model.score(seq, cp);
    n += seq.size() + 1;
  }
  return std::exp(-total / static_cast<double>(n));
}

UniformLM::UniformLM(int k) : k_(k) {
  require(k >= 1, Errc::invalid_argument, "vocabulary size must be positive");
}

std::vector<double> UniformLM::next_log_probs(std::span<const int>, const ContextPolicy&) const {
  return std::vector<double>(static_cast<std::size_t>(k_ + 1), -std::log(k_ + 1.0));
}

double UniformLM::score(const units::UnitSequence& seq, const ContextPolicy&) const {
  units::check_range(seq, k_);
  return -static_cast<double>(seq.size() + 1) * std::log(k_ + 1.0);
}

double ChainScorer::score(const units::UnitSequence& seq, const ContextPolicy&) const {
  units::check_range(seq, static_cast<int>(pi_.size()));
  if (seq.empty()) return 0.0;
  double lp = std::log(pi_[seq[0]]);
  for (std::size_t t = 1; t < seq.size(); ++t) lp += std::log(P_(seq[t - 1], seq[t]));
  return lp;
}

double RandomScorer::score(const units::UnitSequence& seq, const ContextPolicy&) const {
  std::uint64_t h = Rng::mix(seed_);
  for (int tok : seq) h = Rng::mix(h ^ static_cast<std::uint64_t>(tok + 1));
  h = Rng::mix(h ^ seq.size());
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace gmslm::ulm
