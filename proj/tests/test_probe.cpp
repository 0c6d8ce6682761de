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

#include <set>

#include "gmslm/probe.hpp"

namespace gmslm::ulm {
namespace {

struct Data {
  Matrix x;
  std::vector<int> labels;
};

Data clusters(int n, int dims, int classes, double separation, std::uint64_t seed) {
  Rng rng(seed);
  Data d;
  d.x.resize(n, dims);
  for (int i = 0; i < n; ++i) {
    const int c = i % classes;
    d.labels.push_back(c);
    for (int k = 0; k < dims; ++k) d.x(i, k) = rng.normal() + (k % classes == c ? separation : 0.0);
  }
  return d;
}

TEST(Probe, SeparableClustersAreLearned) {
  const auto d = clusters(600, 26, 2, 3.0, 1);
  ProbeOptions o;
  o.seed = 2;
  const auto m = probe_experiment(d.x, d.labels, o);
  EXPECT_GE(m.f1, 0.99);
  EXPECT_EQ(m.n, 60);
}

TEST(Probe, ShuffledLabelsAreAtChance) {
  auto d = clusters(2000, 26, 2, 3.0, 3);
  Rng rng(4);
  rng.shuffle(d.labels);
  ProbeOptions o;
  o.seed = 5;
  const auto m = probe_experiment(d.x, d.labels, o);
  EXPECT_NEAR(m.f1, 0.5, 0.1);
}

TEST(Probe, DuplicatedEvaluationDataGivesIdenticalMetrics) {
  const auto d = clusters(200, 8, 3, 1.0, 6);
  ProbeOptions o;
  o.epochs = 5;
  const auto clf = train_probe(d.x, d.labels, o);
  Matrix twice(400, 8);
  twice << d.x, d.x;
  auto labels = d.labels;
  labels.insert(labels.end(), d.labels.begin(), d.labels.end());
  const auto a = probe_eval(clf, d.x, d.labels), b = probe_eval(clf, twice, labels);
  EXPECT_DOUBLE_EQ(a.f1, b.f1);
  EXPECT_DOUBLE_EQ(a.recall, b.recall);
  EXPECT_DOUBLE_EQ(a.precision, b.precision);
}

TEST(Probe, LossDecreasesAndTrainingIsDeterministic) {
  const auto d = clusters(300, 10, 3, 2.0, 7);
  ProbeOptions o;
  o.epochs = 8;
  std::vector<double> loss;
  const auto a = train_probe(d.x, d.labels, o, &loss);
  ASSERT_EQ(loss.size(), 8u);
  EXPECT_LT(loss.back(), loss.front());
  const auto b = train_probe(d.x, d.labels, o);
  EXPECT_TRUE(a.logits(d.x) == b.logits(d.x));
  const auto c = ProbeClassifier::from_json(a.to_json());
  EXPECT_TRUE(c.logits(d.x) == a.logits(d.x));
}

TEST(Probe, MetricsOnKnownPredictions) {
  // A fixed classifier is hard to build by hand, so check the macro
  // definitions through a perfect and an inverted labeling.
  const auto d = clusters(200, 6, 2, 4.0, 8);
  const auto clf = train_probe(d.x, d.labels, ProbeOptions{});
  const auto good = probe_eval(clf, d.x, d.labels);
  EXPECT_EQ(good.accuracy, 1.0);
  auto flipped = d.labels;
  for (int& l : flipped) l = 1 - l;
  const auto bad = probe_eval(clf, d.x, flipped);
  EXPECT_EQ(bad.accuracy, 0.0);
  EXPECT_EQ(bad.f1, 0.0);
}

TEST(Probe, SingleClassIsRejected) {
  const auto d = clusters(20, 4, 1, 0.0, 9);
  try {
    train_probe(d.x, d.labels, ProbeOptions{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_argument);
  }
}

TEST(BalancedSplit, PerClassShares) {
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) labels.push_back(0);
  for (int i = 0; i < 20; ++i) labels.push_back(1);
  for (int i = 0; i < 2; ++i) labels.push_back(2);
  const auto s = balanced_split(labels, 0.1, 3);
  int valid[3] = {0, 0, 0};
  for (auto i : s.valid) ++valid[labels[i]];
  EXPECT_EQ(valid[0], 5);
  EXPECT_EQ(valid[1], 2);
  EXPECT_EQ(valid[2], 1);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.valid.begin(), s.valid.end());
  EXPECT_EQ(all.size(), labels.size());
  EXPECT_EQ(s.train.size() + s.valid.size(), labels.size());
}

}  // namespace
}  // namespace gmslm::ulm
