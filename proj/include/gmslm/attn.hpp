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

// A small causal Transformer over unit tokens with a hand-written backward
// pass.
//
// Layout: token + learned position embeddings, `layers` pre-norm blocks
// (x += MHA(LN(x)); x += FFN(LN(x)) with tanh-GELU), final LayerNorm and an
// untied output projection over K+2 ids (tokens, EOS, BOS). Input position 0
// is BOS; position p holds z_p and predicts z_{p+1} (EOS after the last).

#ifndef GMSLM_ATTN_HPP_
#define GMSLM_ATTN_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmslm/lm.hpp"

namespace gmslm::ulm {

struct AttnConfig {
  int vocab = 50;  // unit tokens K; the model adds EOS and BOS
  int layers = 2;
  int heads = 2;
  int embed = 64;
  int ffn = 256;
  int max_context = 512;
  double init_scale = 0.02;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const AttnConfig& c);
void from_json(const nlohmann::json& j, AttnConfig& c);

struct Tensor {
  std::string name;
  Matrix value;
  Matrix grad;
};

struct TrainOptions {
  int steps = 1000;
  double lr = 3e-3;
  int batch = 8;
  /// Sequences longer than this are cut into consecutive chunks.
  int chunk = 128;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
  std::uint64_t seed = 0;
};

class AttnLM : public LanguageModel {
 public:
  explicit AttnLM(const AttnConfig& cfg);

  const AttnConfig& config() const { return cfg_; }
  int vocab_size() const override { return cfg_.vocab; }
  /// K + 2.
  int ids() const { return cfg_.vocab + 2; }
  std::size_t parameter_count() const;

  std::vector<Tensor>& tensors() { return params_; }
  const std::vector<Tensor>& tensors() const { return params_; }

  /// Logits (T x (K+2)) for an input of ids, masked per `cp`.
  Matrix forward(std::span<const int> input, const ContextPolicy& cp) const;

  /// Per-position logits for a unit sequence: BOS is prepended, so row p is
  /// the prediction after the first p tokens (rows 0..len).
  Matrix attn_forward(const units::UnitSequence& seq, const ContextPolicy& cp) const;

  /// Mean next-token cross-entropy over the sequence (targets: tokens then
  /// EOS). With `accumulate_grad`, adds d(loss)/d(param) * `grad_scale` into
  /// each tensor's grad.
  double loss(const units::UnitSequence& seq, const ContextPolicy& cp, bool accumulate_grad,
              double grad_scale = 1.0);

  void zero_grad();

  std::vector<double> next_log_probs(std::span<const int> history,
                                     const ContextPolicy& cp) const override;
  double score(const units::UnitSequence& seq, const ContextPolicy& cp) const override;
  using LanguageModel::score;

  nlohmann::json to_json() const;
  static AttnLM from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static AttnLM load(const std::filesystem::path& path);

  std::string fingerprint;

 private:
  struct Cache;
  Matrix run(std::span<const int> input, const ContextPolicy& cp, Cache* cache) const;
  void backward(const Cache& cache, const Matrix& dlogits);
  std::size_t index_of(const std::string& name) const;

  AttnConfig cfg_;
  std::vector<Tensor> params_;
};

/// Adam training on next-token cross-entropy. Each step averages the loss
/// over `batch` chunks drawn with a seeded RNG. Returns the loss per step and
/// throws non-finite-loss if the loss stops being finite.
std::vector<double> attn_train(AttnLM& model, const std::vector<units::UnitSequence>& corpus,
                               const TrainOptions& opts);

}  // namespace gmslm::ulm

#endif  // GMSLM_ATTN_HPP_
