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

#ifndef GMSLM_NGRAM_HPP_
#define GMSLM_NGRAM_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmslm/lm.hpp"

namespace gmslm::ulm {

enum class Smoothing { add_k, kneser_ney };

struct NGramOptions {
  int order = 3;
  Smoothing smoothing = Smoothing::kneser_ney;
  double add_k = 1.0;      // pseudo-count for add_k
  double discount = 0.75;  // absolute discount for kneser_ney
};

/// Count-based n-gram model over K tokens + EOS, with n-1 BOS pads.
///
/// add_k:       P(w|h) = (c(h,w) + k) / (c(h) + k (K+1)); an unseen context
///              with k = 0 backs off to the next shorter context.
/// kneser_ney:  interpolated Kneser-Ney with one discount d. The queried
///              order uses raw counts, every lower order uses continuation
///              counts, and the unigram level interpolates with uniform.
///
/// When a context policy hides part of the history, the model is queried at
/// the order the visible context supports (raw counts at that order). The
/// keep_first part of a policy has no effect here: it only matters when the
/// kept tokens fall inside the n-gram reach, where they are visible anyway.
class NGramLM : public LanguageModel {
 public:
  static NGramLM train(const std::vector<units::UnitSequence>& corpus, int k,
                       const NGramOptions& opts);

  int vocab_size() const override { return k_; }
  int order() const { return opts_.order; }
  const NGramOptions& options() const { return opts_; }

  /// P(outcome | context) where `context` holds token ids including BOS
  /// (K+1) pads; only the last min(order-1, |context|) ids are used.
  double prob(std::span<const int> context, int outcome) const;

  std::vector<double> next_log_probs(std::span<const int> history,
                                     const ContextPolicy& cp) const override;
  double score(const units::UnitSequence& seq, const ContextPolicy& cp) const override;
  using LanguageModel::score;

  /// Visible n-gram context (ids, BOS pads included) for predicting after
  /// `history` under `cp`.
  std::vector<int> visible_context(std::span<const int> history, const ContextPolicy& cp) const;

  nlohmann::json to_json() const;
  static NGramLM from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static NGramLM load(const std::filesystem::path& path);

  std::string fingerprint;

 private:
  struct Entry {
    std::map<int, double> next;  // outcome -> count
    double total = 0.0;
  };
  using Table = std::map<std::vector<int>, Entry>;  // context -> entry

  double add_k_prob(std::span<const int> ctx, int w) const;
  double kn_prob(std::span<const int> ctx, int w, bool top) const;
  void build_continuations();

  int k_ = 0;
  NGramOptions opts_;
  std::vector<Table> raw_;   // raw_[m-1]: contexts of length m-1
  std::vector<Table> cont_;  // continuation counts, same indexing
};

std::string to_string(Smoothing s);
Smoothing parse_smoothing(const std::string& s);

}  // namespace gmslm::ulm

#endif  // GMSLM_NGRAM_HPP_
