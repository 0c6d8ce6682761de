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


#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "gmslm/generate.hpp"
#include "gmslm/ngram.hpp"
#include "gmslm/synthlab.hpp"

namespace gmslm::ulm {
namespace {

std::vector<double> tempered(const LanguageModel& m, const units::UnitSequence& h, double temp) {
  auto lp = m.next_log_probs(h, {});
  for (double& v : lp) v /= temp;
  const double z = log_sum_exp(lp);
  for (double& v : lp) v -= z;
  return lp;
}

// Best tempered log-probability over every continuation that ends with EOS
// or reaches max_len.
double brute_best(const LanguageModel& m, units::UnitSequence prefix, int max_len, double temp) {
  const auto lp = tempered(m, prefix, temp);
  double best = lp[m.eos()];
  for (int w = 0; w < m.vocab_size(); ++w) {
    prefix.push_back(w);
    const double rest = static_cast<int>(prefix.size()) >= max_len
                            ? 0.0
                            : brute_best(m, prefix, max_len, temp);
    best = std::max(best, lp[w] + rest);
    prefix.pop_back();
  }
  return best;
}

NGramLM small_model(std::uint64_t seed) {
  const auto chain = synth::sparse_cycle_chain(3, 1, 0.4, seed);
  NGramOptions o;
  o.order = 3;
  return NGramLM::train(synth::markov_corpus(chain, 30, 5, seed + 1), 3, o);
}

TEST(Generate, GreedyOnIdentityChainRepeatsThePrompt) {
  const auto corpus = synth::markov_corpus(synth::MarkovChain::identity(5, 3), 20, 40, 1);
  NGramOptions o;
  o.order = 2;
  const auto lm = NGramLM::train(corpus, 5, o);
  GenerateOptions g;
  g.greedy = true;
  g.max_len = 12;
  const auto out = generate(lm, {3}, g);
  EXPECT_EQ(out.tokens, units::UnitSequence(12, 3));
  EXPECT_FALSE(out.ended);
}

TEST(Generate, PromptIsAlwaysAPrefix) {
  const auto lm = small_model(2);
  for (bool sample : {false, true}) {
    GenerateOptions g;
    g.sample = sample;
    g.max_len = 10;
    const units::UnitSequence prompt{2, 0, 1};
    const auto out = generate(lm, prompt, g);
    ASSERT_GE(out.tokens.size(), prompt.size());
    EXPECT_TRUE(std::equal(prompt.begin(), prompt.end(), out.tokens.begin()));
    EXPECT_LE(out.tokens.size(), 10u);
  }
}

TEST(Generate, DeterministicPerSeed) {
  const auto lm = small_model(3);
  GenerateOptions g;
  g.sample = true;
  g.seed = 7;
  EXPECT_EQ(generate(lm, {1}, g).tokens, generate(lm, {1}, g).tokens);
}

TEST(Generate, WiderBeamIsNeverWorseAndNeverBeatsExhaustiveSearch) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto lm = small_model(seed);
    for (int max_len : {3, 4, 5, 6}) {
      GenerateOptions g;
      g.max_len = max_len;
      g.beam = 1;
      const double one = generate(lm, {}, g).log_prob;
      g.beam = 5;
      const double five = generate(lm, {}, g).log_prob;
      const double best = brute_best(lm, {}, max_len, g.temperature);
      EXPECT_GE(five, one - 1e-12) << seed << " " << max_len;
      EXPECT_LE(five, best + 1e-12);
    }
  }
}

TEST(Generate, RejectsBadOptions) {
  const auto lm = small_model(4);
  GenerateOptions g;
  g.beam = 0;
  EXPECT_THROW(generate(lm, {}, g), Error);
  g = {};
  g.temperature = 0.0;
  EXPECT_THROW(generate(lm, {}, g), Error);
  g = {};
  EXPECT_THROW(generate(lm, {7}, g), Error);
}

}  // namespace
}  // namespace gmslm::ulm
