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

// Shared conventions for unit language models.
//
// Unit tokens are 0..K-1. Internally EOS = K and BOS = K+1. A sequence
// z_1..z_n is scored as sum_t log P(z_t | history) plus log P(EOS | z_1..z_n).
//
// Context policy: when predicting the token after history z_1..z_t, the
// visible history is the last `window` tokens z_{t-window+1}..z_t plus the
// first `keep_first` tokens. The start-of-sequence sentinel stays visible.

#ifndef GMSLM_LM_HPP_
#define GMSLM_LM_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gmslm/common.hpp"
#include "gmslm/units.hpp"

namespace gmslm::ulm {

struct ContextPolicy {
  static constexpr int kUnlimited = -1;
  int window = kUnlimited;
  int keep_first = 0;

  bool unlimited() const { return window == kUnlimited; }
  void validate() const;
  std::string label() const;
};

/// Anything that assigns a log-probability to a unit sequence.
class SequenceScorer {
 public:
  virtual ~SequenceScorer() = default;
  virtual double score(const units::UnitSequence& seq, const ContextPolicy& cp) const = 0;
  double score(const units::UnitSequence& seq) const { return score(seq, ContextPolicy{}); }
};

/// A scorer with an explicit next-token distribution over K tokens + EOS.
class LanguageModel : public SequenceScorer {
 public:
  /// Number of unit tokens K.
  virtual int vocab_size() const = 0;
  int eos() const { return vocab_size(); }
  int bos() const { return vocab_size() + 1; }

  /// Natural-log probabilities of the K+1 outcomes (tokens, then EOS) after
  /// `history`, which holds unit tokens only.
  virtual std::vector<double> next_log_probs(std::span<const int> history,
                                             const ContextPolicy& cp) const = 0;

  using SequenceScorer::score;
};

/// exp(-(sum log P) / N) with N counting every token plus one EOS per sequence.
double ppl(const SequenceScorer& model, const std::vector<units::UnitSequence>& corpus,
           const ContextPolicy& cp = {});

/// Uniform over the K tokens and EOS at every step; its perplexity is K + 1.
class UniformLM : public LanguageModel {
 public:
  explicit UniformLM(int k);
  int vocab_size() const override { return k_; }
  std::vector<double> next_log_probs(std::span<const int> history,
                                     const ContextPolicy& cp) const override;
  double score(const units::UnitSequence& seq, const ContextPolicy& cp) const override;
  using LanguageModel::score;

 private:
  int k_;
};

/// The generating first-order chain as a scorer (for oracle experiments).
/// Its EOS probability is 1 at the end of every sequence.
class ChainScorer : public SequenceScorer {
 public:
  ChainScorer(Vector pi, Matrix P) : pi_(std::move(pi)), P_(std::move(P)) {}
  double score(const units::UnitSequence& seq, const ContextPolicy& cp) const override;
  using SequenceScorer::score;

 private:
  Vector pi_;
  Matrix P_;
};

/// Uniformly random score per distinct sequence, keyed by a seed.
class RandomScorer : public SequenceScorer {
 public:
  explicit RandomScorer(std::uint64_t seed) : seed_(seed) {}
  double score(const units::UnitSequence& seq, const ContextPolicy& cp) const override;
  using SequenceScorer::score;

 private:
  std::uint64_t seed_;
};

double log_sum_exp(std::span<const double> v);

}  // namespace gmslm::ulm

#endif  // GMSLM_LM_HPP_
