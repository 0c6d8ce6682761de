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

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "gmslm/bench.hpp"
#include "gmslm/synthlab.hpp"

namespace gmslm::bench {
namespace {

// A window of distinguishable calls: call i is a constant block of value i+1.
struct Fixture {
  seg::SegmentWindow window;
  dsp::Waveform audio;
};

Fixture blocks(const std::vector<std::pair<double, double>>& calls, double total_s) {
  Fixture f;
  f.audio.samples.assign(static_cast<std::size_t>(total_s * 16000.0), 0.0);
  f.window.end_s = total_s;
  for (std::size_t i = 0; i < calls.size(); ++i) {
    f.window.calls.push_back({calls[i].first, calls[i].second});
    const auto a = static_cast<std::size_t>(std::llround(calls[i].first * 16000.0));
    const auto b = static_cast<std::size_t>(std::llround(calls[i].second * 16000.0));
    for (std::size_t s = a; s < b; ++s) f.audio.samples[s] = 0.1 * static_cast<double>(i + 1);
  }
  return f;
}

std::vector<double> call_values(const dsp::Waveform& w) {
  std::vector<double> out;
  double prev = 0.0;
  for (double v : w.samples) {
    if (v != 0.0 && v != prev) out.push_back(v);
    prev = v;
  }
  return out;
}

TEST(NonIdentityPermutation, UniformOverNonIdentity) {
  Rng rng(1);
  std::map<std::vector<int>, int> counts;
  for (int i = 0; i < 50000; ++i) ++counts[non_identity_permutation(3, rng)];
  EXPECT_EQ(counts.size(), 5u);
  EXPECT_EQ(counts.count({0, 1, 2}), 0u);
  for (const auto& [perm, c] : counts) EXPECT_NEAR(c / 50000.0, 0.2, 0.01);
  EXPECT_EQ(non_identity_permutation(2, rng), (std::vector<int>{1, 0}));
}

TEST(Shuffle, PermutesCallsAndKeepsGaps) {
  const auto f = blocks({{0.5, 1.0}, {1.8, 2.1}, {3.0, 3.9}}, 5.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = make_shuffle(f.window, f.audio, seed);
    EXPECT_EQ(s.audio.samples.size(), f.audio.samples.size());
    auto values = call_values(s.audio);
    ASSERT_EQ(values.size(), 3u);
    EXPECT_NE(values, call_values(f.audio));
    std::sort(values.begin(), values.end());
    EXPECT_EQ(values, call_values(f.audio));
    // The first gap is untouched.
    for (std::size_t i = 0; i < 8000; ++i) ASSERT_EQ(s.audio.samples[i], 0.0);
    EXPECT_EQ(s.order.size(), 3u);
  }
  const auto again = make_shuffle(f.window, f.audio, 3);
  EXPECT_EQ(again.audio.samples, make_shuffle(f.window, f.audio, 3).audio.samples);
}

TEST(Shuffle, TwoCallsAreSwappedAndOneCallIsIneligible) {
  const auto f = blocks({{0.5, 1.0}, {2.0, 2.2}}, 3.0);
  const auto s = make_shuffle(f.window, f.audio, 9);
  EXPECT_EQ(call_values(s.audio), (std::vector<double>{0.1 * 2, 0.1 * 1}));
  const auto one = blocks({{0.5, 1.0}}, 2.0);
  try {
    make_shuffle(one.window, one.audio, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ineligible_window);
  }
}

TEST(ShuffleUnits, PermutesSpans) {
  const UnitWindow w{{9, 1, 1, 9, 2, 9, 3, 3, 3}, {{1, 3}, {4, 5}, {6, 9}}};
  std::vector<int> order;
  const auto s = shuffle_units(w, 4, &order);
  EXPECT_EQ(s.tokens.size(), w.tokens.size());
  EXPECT_NE(s.tokens, w.tokens);
  EXPECT_EQ(s.tokens[0], 9);
  auto a = s.tokens, b = w.tokens;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(Concat, SixCallsSplitAtTheMidpoint) {
  std::vector<std::pair<double, double>> six;
  for (int i = 0; i < 6; ++i) six.push_back({0.3 + 1.5 * i, 0.3 + 1.5 * i + 0.5});
  const auto a = blocks(six, 10.0);
  auto b = blocks(six, 10.0);
  for (double& v : b.audio.samples) v = -v;
  const auto c = make_concat(a.window, a.audio, b.window, b.audio);
  ASSERT_EQ(c.calls.size(), 6u);
  std::vector<double> expect;
  for (int i = 0; i < 6; ++i) expect.push_back((i < 3 ? 1.0 : -1.0) * 0.1 * (i + 1));
  EXPECT_EQ(call_values(c.audio), expect);
}

TEST(Concat, CountsAndPreconditions) {
  const auto a = blocks({{0.2, 0.5}, {1.0, 1.3}, {2.0, 2.4}, {3.0, 3.2}}, 4.0);
  auto b = blocks({{0.1, 0.3}, {0.8, 1.1}}, 2.0);
  for (double& v : b.audio.samples) v = -v;
  EXPECT_EQ(make_concat(a.window, a.audio, b.window, b.audio).calls.size(), 3u);
  EXPECT_THROW(make_concat(a.window, a.audio, a.window, a.audio), Error);
  const auto odd = blocks({{0.2, 0.5}, {1.0, 1.3}, {2.0, 2.4}}, 3.0);
  try {
    make_concat(odd.window, odd.audio, b.window, b.audio);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ineligible_window);
  }
  const UnitWindow ua{{1, 1, 2, 2}, {{0, 2}, {2, 4}}}, ub{{3, 3, 4}, {{0, 1}, {1, 3}}};
  EXPECT_EQ(concat_units(ua, ub).tokens, (units::UnitSequence{1, 1, 3, 4}));
}

TEST(Reversal, Involution) {
  const auto f = blocks({{0.2, 0.6}, {1.0, 1.3}}, 2.0);
  const auto r = make_reversal(f.audio);
  EXPECT_EQ(r.samples.size(), f.audio.samples.size());
  EXPECT_EQ(make_reversal(r).samples, f.audio.samples);
  EXPECT_EQ(reverse_units({1, 2, 3}), (units::UnitSequence{3, 2, 1}));
}

std::vector<PheeRecord> records() {
  return {{"A", "X", "a1", "x1", 1.0}, {"B", "X", "b1", "x2", 1.0}, {"A", "Y", "a2", "y1", 1.0},
          {"C", "Z", "c1", "z1", 1.0}};
}

TEST(Phee, CallerChangeUsesAnotherResponder) {
  const auto recs = records();
  const auto r = make_phee_pairs(recs, Task::caller_change, 1, 3);
  EXPECT_EQ(r.pairs.size(), 12u);
  std::map<std::string, std::string> responder;
  for (const auto& rec : recs) responder[rec.response_ref] = rec.receiver_id;
  for (const auto& p : r.pairs) {
    const auto call = p.positive.ref.substr(0, p.positive.ref.find('+'));
    const auto pos = p.positive.ref.substr(p.positive.ref.find('+') + 1);
    const auto neg = p.distractor.ref.substr(p.distractor.ref.find('+') + 1);
    EXPECT_EQ(p.distractor.ref.substr(0, p.distractor.ref.find('+')), call);
    EXPECT_NE(pos, neg);
    EXPECT_NE(responder[pos], responder[neg]);
    EXPECT_EQ(p.task, Task::caller_change);
  }
}

TEST(Phee, TwoRecordsSwapResponses) {
  const std::vector<PheeRecord> two{{"A", "X", "a", "x", 1.0}, {"B", "Y", "b", "y", 1.0}};
  const auto r = make_phee_pairs(two, Task::caller_change, 5);
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_EQ(r.pairs[0].distractor.ref, "a+y");
  EXPECT_EQ(r.pairs[1].distractor.ref, "b+x");
}

TEST(Phee, ReceiverChangeNeedsAnotherAddressee) {
  const auto r = make_phee_pairs(records(), Task::receiver_change, 2);
  // X answered both A and B; Y and Z answered a single caller each.
  EXPECT_EQ(r.pairs.size(), 2u);
  EXPECT_EQ(r.skipped.size(), 2u);
  for (const auto& p : r.pairs) {
    const bool from_a = p.positive.ref == "a1+x1";
    EXPECT_EQ(p.distractor.ref, from_a ? "a1+x2" : "b1+x1");
  }
}

TEST(Phee, AugmentationScalesAndIsDeterministic) {
  std::vector<PheeRecord> recs;
  for (int i = 0; i < 56; ++i)
    recs.push_back({"c" + std::to_string(i % 7), "r" + std::to_string(i % 4),
                    "call" + std::to_string(i), "resp" + std::to_string(i), 0.5});
  const auto a = make_phee_pairs(recs, Task::caller_change, 3, 11);
  EXPECT_EQ(a.pairs.size(), 56u * 11u);
  EXPECT_TRUE(a.skipped.empty());
  const auto b = make_phee_pairs(recs, Task::caller_change, 3, 11);
  ASSERT_EQ(a.pairs.size(), b.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) EXPECT_EQ(a.pairs[i].distractor.ref, b.pairs[i].distractor.ref);
}

class LengthScorer : public ulm::SequenceScorer {
 public:
  double score(const units::UnitSequence& s, const ulm::ContextPolicy&) const override {
    return static_cast<double>(s.size());
  }
};

BenchmarkPair pair(units::UnitSequence pos, units::UnitSequence neg, Task t = Task::shuffle) {
  BenchmarkPair p;
  p.task = t;
  p.positive = {"p", std::move(pos)};
  p.distractor = {"d", std::move(neg)};
  return p;
}

TEST(PairwiseEval, TiesAreIncorrect) {
  const LengthScorer len;
  const auto r = pairwise_eval(len, {pair({1, 2}, {2, 1}), pair({1}, {2})});
  EXPECT_EQ(r.overall.accuracy(), 0.0);
  EXPECT_EQ(r.per_task.at("shuffle").total, 2);
  EXPECT_THROW(pairwise_eval(len, {}), Error);
}

TEST(PairwiseEval, SwappingComplementsAccuracyWithoutTies) {
  const ulm::RandomScorer rnd(3);
  std::vector<BenchmarkPair> pairs;
  Rng rng(4);
  for (int i = 0; i < 300; ++i) {
    units::UnitSequence a(5), b(5);
    for (int& x : a) x = static_cast<int>(rng.below(9));
    for (int& x : b) x = static_cast<int>(rng.below(9));
    if (a != b) pairs.push_back(pair(a, b, i % 2 ? Task::concat : Task::reversal));
  }
  const auto r = pairwise_eval(rnd, pairs), s = pairwise_eval(rnd, swapped(pairs));
  EXPECT_EQ(r.overall.correct + s.overall.correct, r.overall.total);
  EXPECT_EQ(r.per_task.size(), 2u);
}

TEST(Pairs, JsonlRoundTrip) {
  auto p = pair({1, 2}, {2, 1}, Task::receiver_change);
  p.seed = 77;
  p.provenance = {{"window", "w1"}};
  BenchmarkPair q = p;
  q.distractor.units.reset();
  const auto path = std::filesystem::temp_directory_path() / "gmslm_test_pairs.jsonl";
  write_pairs(path, {p, q});
  const auto back = read_pairs(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].task, Task::receiver_change);
  EXPECT_EQ(back[0].seed, 77u);
  EXPECT_EQ(*back[0].distractor.units, (units::UnitSequence{2, 1}));
  EXPECT_FALSE(back[1].distractor.units.has_value());
  EXPECT_EQ(back[0].provenance.at("window"), "w1");
}

TEST(PheeRecord, Validation) {
  EXPECT_THROW((PheeRecord{"A", "A", "c", "r", 1.0}.validate()), Error);
  EXPECT_THROW((PheeRecord{"A", "B", "c", "r", 11.0}.validate()), Error);
}

}  // namespace
}  // namespace gmslm::bench
