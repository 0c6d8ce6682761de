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

#include <filesystem>
#include <map>

#include "gmslm/config.hpp"
#include "gmslm/manifest.hpp"

namespace gmslm {
namespace {

using corpus::CorpusManifest;
using corpus::ManifestRecord;

CorpusManifest labelled(int n) {
  CorpusManifest m;
  for (int i = 0; i < n; ++i) {
    ManifestRecord r;
    r.path = "clip_" + std::to_string(i) + ".wav";
    r.duration_s = 1.0 + i % 3;
    r.call_type = i % 4 == 0 ? "trill" : "phee";
    m.records.push_back(r);
  }
  return m;
}

TEST(Allocate, LargestRemainder) {
  EXPECT_EQ(corpus::allocate(10, {0.8, 0.1, 0.1}), (std::array<std::size_t, 3>{8, 1, 1}));
  EXPECT_EQ(corpus::allocate(7, {0.8, 0.1, 0.1}), (std::array<std::size_t, 3>{5, 1, 1}));
  EXPECT_EQ(corpus::allocate(5, {0.5, 0.5, 0.0}), (std::array<std::size_t, 3>{3, 2, 0}));
  EXPECT_EQ(corpus::allocate(3, {1.0 / 3, 1.0 / 3, 1.0 / 3}), (std::array<std::size_t, 3>{1, 1, 1}));
  EXPECT_EQ(corpus::allocate(0, {0.5, 0.5, 0.0}), (std::array<std::size_t, 3>{0, 0, 0}));
  EXPECT_THROW(corpus::split_manifest(labelled(4), {0.5, 0.4, 0.0}, 1), Error);
  EXPECT_THROW(corpus::split_manifest(labelled(4), {1.2, -0.2, 0.0}, 1), Error);
}

TEST(Allocate, SumsToN) {
  for (std::size_t n = 0; n < 60; ++n) {
    const auto a = corpus::allocate(n, {0.7, 0.2, 0.1});
    EXPECT_EQ(a[0] + a[1] + a[2], n);
  }
}

TEST(Split, DeterministicAndStratified) {
  const auto m = labelled(40);
  const auto a = corpus::split_manifest(m, {0.8, 0.1, 0.1}, 5);
  const auto b = corpus::split_manifest(m, {0.8, 0.1, 0.1}, 5);
  ASSERT_EQ(a.records.size(), 40u);
  std::map<std::string, std::map<std::string, int>> counts;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].split, b.records[i].split);
    ++counts[a.records[i].stratum()][a.records[i].split];
  }
  EXPECT_EQ(counts["trill"]["train"], 8);
  EXPECT_EQ(counts["trill"]["valid"], 1);
  EXPECT_EQ(counts["trill"]["test"], 1);
  EXPECT_EQ(counts["phee"]["train"], 24);
  EXPECT_EQ(counts["phee"]["valid"], 3);
  EXPECT_EQ(counts["phee"]["test"], 3);
  bool differs = false;
  for (int seed = 6; seed < 12 && !differs; ++seed) {
    const auto c = corpus::split_manifest(m, {0.8, 0.1, 0.1}, seed);
    for (std::size_t i = 0; i < c.records.size(); ++i) differs |= c.records[i].split != a.records[i].split;
  }
  EXPECT_TRUE(differs);
}

TEST(Manifest, ValidationAndRoundTrip) {
  auto m = labelled(3);
  m.records[1].caller_id = "A1";
  m.records[1].receiver_id = "A2";
  m.records[2].split = "valid";
  const auto path = std::filesystem::temp_directory_path() / "gmslm_test_manifest.jsonl";
  corpus::write_manifest(path, m);
  const auto back = corpus::read_manifest(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.records.size(), 3u);
  EXPECT_EQ(*back.records[1].caller_id, "A1");
  EXPECT_FALSE(back.records[0].caller_id.has_value());
  EXPECT_EQ(back.records[2].split, "valid");
  EXPECT_EQ(back.in_split("valid").size(), 1u);

  auto dup = m;
  dup.records[1].path = dup.records[0].path;
  EXPECT_THROW(dup.validate(), Error);
  auto neg = m;
  neg.records[0].duration_s = -1.0;
  EXPECT_THROW(neg.validate(), Error);
  auto bad = m;
  bad.records[0].split = "holdout";
  EXPECT_THROW(bad.validate(), Error);
  EXPECT_THROW(corpus::read_manifest("/nonexistent/manifest.jsonl"), Error);
}

TEST(Stratum, FallsBackToCaller) {
  ManifestRecord r;
  EXPECT_EQ(r.stratum(), "");
  r.caller_id = "A3";
  EXPECT_EQ(r.stratum(), "A3");
  r.call_type = "twitter";
  EXPECT_EQ(r.stratum(), "twitter");
}

TEST(RunConfig, DefaultsRoundTripWithStableFingerprint) {
  const pipeline::RunConfig d;
  d.validate();
  const auto again = pipeline::config_from_json(d.to_json());
  EXPECT_EQ(again.fingerprint(), d.fingerprint());
  EXPECT_EQ(pipeline::config_from_json(nlohmann::json::object()).fingerprint(), d.fingerprint());
  EXPECT_EQ(d.fingerprint().size(), 16u);
  EXPECT_EQ(d.detector.energy_floor, 0.75);
}

TEST(RunConfig, OverridesChangeTheFingerprint) {
  const pipeline::RunConfig d;
  const auto c = pipeline::config_from_json({{"seed", 9}, {"ngram", {{"order", 4}}}});
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.ngram.order, 4);
  EXPECT_EQ(c.quantizer.kmeans.k, d.quantizer.kmeans.k);
  EXPECT_NE(c.fingerprint(), d.fingerprint());
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  auto code = [](const nlohmann::json& j) {
    try {
      pipeline::config_from_json(j);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io_error;
  };
  EXPECT_EQ(code({{"seeds", 1}}), Errc::invalid_argument);
  EXPECT_EQ(code({{"ngram", {{"ordr", 3}}}}), Errc::invalid_argument);
  EXPECT_EQ(code({{"ngram", {{"order", 0}}}}), Errc::invalid_argument);
  EXPECT_EQ(code({{"corpus", {{"splits", {0.5, 0.2, 0.2}}}}}), Errc::invalid_argument);
  EXPECT_EQ(code({{"bench", {{"phee_augment", 0}}}}), Errc::invalid_argument);
  EXPECT_EQ(code(nlohmann::json::array()), Errc::invalid_argument);
}

TEST(ContextGrid, PolicyOrder) {
  const pipeline::ContextGrid g{{50, 20}, {0, 5}};
  const auto p = g.policies();
  ASSERT_EQ(p.size(), 5u);
  EXPECT_TRUE(p[0].unlimited());
  EXPECT_EQ(p[1].window, 50);
  EXPECT_EQ(p[2].keep_first, 5);
}

}  // namespace
}  // namespace gmslm
