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

#include "gmslm/synthlab.hpp"
#include "support.hpp"

namespace gmslm::synth {
namespace {

TEST(SynthScene, TruthAndDeterminism) {
  SceneSpec empty;
  empty.total_s = 2.0;
  const auto quiet = synth_scene(empty);
  EXPECT_TRUE(quiet.truth.empty());
  EXPECT_EQ(quiet.audio.samples.size(), 32000u);

  const auto s = testing::tone_scene(2.0, 1.0, 5.0);
  const auto a = synth_scene(s), b = synth_scene(s);
  ASSERT_EQ(a.truth.size(), 1u);
  EXPECT_EQ(a.truth[0], (seg::CallSegment{2.0, 3.0}));
  EXPECT_EQ(a.audio.samples, b.audio.samples);
}

TEST(SynthScene, RejectsOverlapAndOutOfBand) {
  SceneSpec s = testing::tone_scene(1.0, 1.0, 5.0);
  s.calls.push_back({1.5, s.calls[0].call});
  EXPECT_THROW(synth_scene(s), Error);
  s = testing::tone_scene(1.0, 1.0, 5.0, 3000.0);
  EXPECT_THROW(synth_scene(s), Error);
  s = testing::tone_scene(4.5, 1.0, 5.0);
  EXPECT_THROW(synth_scene(s), Error);
}

TEST(SynthScene, JsonRoundTrip) {
  const SceneSpec s = testing::random_scene(3);
  const SceneSpec t = nlohmann::json(s).get<SceneSpec>();
  EXPECT_EQ(synth_scene(s).audio.samples, synth_scene(t).audio.samples);
}

TEST(MarkovCorpus, IdentityChainRepeatsItsStart) {
  const auto c = MarkovChain::identity(5, 3);
  for (const auto& seq : markov_corpus(c, 10, 20, 1))
    for (int t : seq) EXPECT_EQ(t, 3);
}

TEST(MarkovCorpus, UniformBigramsAndDeterminism) {
  const auto c = MarkovChain::uniform(2);
  const auto corpus = markov_corpus(c, 1000, 1000, 7);
  EXPECT_EQ(corpus, markov_corpus(c, 1000, 1000, 7));
  double counts[2][2] = {{0, 0}, {0, 0}};
  double n = 0;
  for (const auto& s : corpus)
    for (std::size_t t = 1; t < s.size(); ++t) {
      counts[s[t - 1]][s[t]] += 1;
      n += 1;
    }
  for (auto& row : counts)
    for (double v : row) EXPECT_NEAR(v / n / 0.25, 1.0, 0.02);
}

TEST(MarkovCorpus, TransitionEstimatesConverge) {
  const auto c = sparse_cycle_chain(8, 2, 0.2, 5);
  const auto corpus = markov_corpus(c, 1000, 1000, 11);
  Matrix counts = Matrix::Zero(8, 8);
  for (const auto& s : corpus)
    for (std::size_t t = 1; t < s.size(); ++t) counts(s[t - 1], s[t]) += 1;
  for (int i = 0; i < 8; ++i) counts.row(i) /= counts.row(i).sum();
  EXPECT_LT((counts - c.P).cwiseAbs().maxCoeff(), 0.01);
}

TEST(ChainPpl, ClosedForms) {
  EXPECT_NEAR(chain_ppl(MarkovChain::uniform(4)), 4.0, 1e-12);
  EXPECT_NEAR(chain_ppl(MarkovChain::identity(3, 0)), 1.0, 1e-12);
  MarkovChain c;
  c.pi = Vector::Constant(2, 0.5);
  c.P = Matrix{{0.9, 0.1}, {0.1, 0.9}};
  const double h = -0.9 * std::log(0.9) - 0.1 * std::log(0.1);
  EXPECT_NEAR(chain_ppl(c), std::exp(h), 1e-12);
  EXPECT_NEAR(chain_ppl(c), 1.384, 1e-3);
}

TEST(ChainPpl, PeriodicChainStillSettles) {
  MarkovChain c;
  c.pi = Vector::Unit(2, 0);
  c.P = Matrix{{0.0, 1.0}, {1.0, 0.0}};
  const Vector mu = stationary_distribution(c);
  EXPECT_NEAR(mu[0], 0.5, 1e-9);
  EXPECT_NEAR(chain_ppl(c), 1.0, 1e-12);
}

TEST(MarkovChain, ValidationAndJson) {
  MarkovChain c = MarkovChain::uniform(3);
  c.P(0, 0) += 0.1;
  EXPECT_THROW(c.validate(), Error);
  const auto good = sparse_cycle_chain(5, 2, 0.1, 1);
  const MarkovChain back = nlohmann::json(good).get<MarkovChain>();
  EXPECT_TRUE(back.P == good.P);
  EXPECT_TRUE(back.pi == good.pi);
}

TEST(ContextChain, RowsAreDistributionsAndCorpusUsesThem) {
  const auto c = random_context_chain(4, 3, 1, 0.0, 2);
  EXPECT_EQ(c.table.rows(), 64);
  for (Eigen::Index r = 0; r < c.table.rows(); ++r) EXPECT_NEAR(c.table.row(r).sum(), 1.0, 1e-12);
  for (const auto& s : context_corpus(c, 20, 30, 3)) {
    ASSERT_EQ(s.size(), 30u);
    for (std::size_t t = 3; t < s.size(); ++t) {
      const std::span<const int> h(s.data() + t - 3, 3);
      EXPECT_EQ(c.table(static_cast<Eigen::Index>(c.context_index(h)), s[t]), 1.0);
    }
  }
}

}  // namespace
}  // namespace gmslm::synth
