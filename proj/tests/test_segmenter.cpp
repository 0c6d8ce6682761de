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

#include "gmslm/segmenter.hpp"
#include "gmslm/synthlab.hpp"
#include "support.hpp"

namespace gmslm::seg {
namespace {

dsp::Waveform silence(double seconds) {
  dsp::Waveform w;
  w.samples.assign(static_cast<std::size_t>(seconds * 16000.0), 0.0);
  return w;
}

TEST(DetectCalls, SinglePheeInNoise) {
  synth::SceneSpec s = testing::tone_scene(2.0, 1.0, 10.0);
  s.calls[0].call.fm_depth_hz = 100.0;
  const auto scene = synth::synth_scene(s);
  const auto calls = detect_calls(scene.audio, DetectorParams{});
  ASSERT_EQ(calls.size(), 1u);
  EXPECT_GE(calls[0].onset_s, 1.95);
  EXPECT_LE(calls[0].onset_s, 2.05);
  EXPECT_GE(calls[0].offset_s, 2.95);
  EXPECT_LE(calls[0].offset_s, 3.05);
}

TEST(DetectCalls, DurationGate) {
  const DetectorParams p;
  EXPECT_TRUE(detect_calls(synth::synth_scene(testing::tone_scene(2.0, 0.10, 6.0)).audio, p).empty());
  EXPECT_TRUE(detect_calls(synth::synth_scene(testing::tone_scene(1.0, 5.0, 8.0)).audio, p).empty());
}

TEST(DetectCalls, ShortOrEmptySignalGivesNoCalls) {
  EXPECT_TRUE(detect_calls(silence(0.05), DetectorParams{}).empty());
  EXPECT_TRUE(detect_calls(dsp::Waveform{}, DetectorParams{}).empty());
}

TEST(DetectCalls, OutputInvariantsAndDeterminism) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto scene = synth::synth_scene(testing::random_scene(seed));
    const auto a = detect_calls(scene.audio, DetectorParams{});
    EXPECT_EQ(a, detect_calls(scene.audio, DetectorParams{}));
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_GT(a[i].offset_s, a[i].onset_s);
      EXPECT_GE(a[i].duration_s(), 0.25);
      EXPECT_LE(a[i].duration_s(), 4.0);
      if (i > 0) EXPECT_GT(a[i].onset_s, a[i - 1].offset_s);
    }
  }
}

TEST(DetectCalls, RaisingTheFloorNeverAddsActiveFrames) {
  const auto scene = synth::synth_scene(testing::random_scene(99));
  std::size_t prev = SIZE_MAX;
  for (double floor : {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
    DetectorParams p;
    p.energy_floor = floor;
    DetectionTrace trace;
    detect_calls(scene.audio, p, &trace);
    std::size_t active = 0;
    for (bool a : trace.energetic) active += a;
    EXPECT_LE(active, prev) << floor;
    prev = active;
  }
}

TEST(DetectCalls, LongBroadbandNoiseBurstIsRemoved) {
  // Three seconds would pass the call-duration gate, so only the noise stage
  // can remove it.
  auto w = silence(8.0);
  Rng rng(4);
  for (std::size_t i = 16000; i < 16000 + 48000; ++i) w.samples[i] = rng.normal();
  DetectionTrace trace;
  const auto calls = detect_calls(w, DetectorParams{}, &trace);
  EXPECT_TRUE(calls.empty());
  std::size_t noise = 0;
  for (bool n : trace.noise) noise += n;
  EXPECT_GT(noise, 0u);
}

TEST(DetectorParams, JsonRoundTripAndValidation) {
  DetectorParams p;
  p.energy_floor = 3.5;
  p.min_gap_frames = 4;
  const DetectorParams q = nlohmann::json(p).get<DetectorParams>();
  EXPECT_EQ(q.energy_floor, 3.5);
  EXPECT_EQ(q.min_gap_frames, 4);
  p.call_dur_lo = 5.0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(PackWindows, Examples) {
  const auto w = silence(13.0);
  const auto win = pack_windows(w, {{0, 1}, {2, 3}, {11, 12}});
  ASSERT_EQ(win.size(), 2u);
  EXPECT_EQ(win[0].calls.size(), 2u);
  EXPECT_EQ(win[1].calls.size(), 1u);
  EXPECT_EQ(win[1].start_s, 11.0);
  EXPECT_TRUE(pack_windows(w, {}).empty());

  std::vector<CallSegment> five;
  for (int i = 0; i < 5; ++i) five.push_back({2.3 * i, 2.3 * i + 0.8});
  const auto one = pack_windows(silence(12.0), five);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].calls.size(), 5u);
}

TEST(PackWindows, EveryCallOnceAndWindowsAtMostTenSeconds) {
  Rng rng(6);
  std::vector<CallSegment> calls;
  double t = 0.1;
  for (int i = 0; i < 40; ++i) {
    const double d = rng.uniform(0.25, 4.0);
    calls.push_back({t, t + d});
    t += d + rng.uniform(0.1, 6.0);
  }
  const auto w = silence(t + 1.0);
  std::size_t total = 0;
  for (const auto& win : pack_windows(w, calls)) {
    EXPECT_LE(win.end_s - win.start_s, kMaxWindowSeconds + 1e-9);
    for (const auto& c : win.calls) {
      EXPECT_GE(c.onset_s, 0.0);
      EXPECT_LE(c.offset_s, win.end_s - win.start_s + 1e-9);
    }
    total += win.calls.size();
  }
  EXPECT_EQ(total, calls.size());
}

TEST(ScoreDetection, Examples) {
  const std::vector<CallSegment> truth{{1, 2}, {3, 4}, {5, 6}};
  auto s = score_detection(truth, truth);
  EXPECT_EQ(s.precision, 1.0);
  EXPECT_EQ(s.recall, 1.0);
  s = score_detection({}, truth);
  EXPECT_EQ(s.precision, 0.0);
  EXPECT_EQ(s.recall, 0.0);
  EXPECT_EQ(score_detection({}, {}).precision, 1.0);
  auto extra = truth;
  extra.push_back({8, 9});
  s = score_detection(extra, truth);
  EXPECT_EQ(s.precision, 0.75);
  EXPECT_EQ(s.recall, 1.0);
  s = score_detection({{1.04, 2.06}}, {{1, 2}});
  EXPECT_EQ(s.matches, 0);
}

}  // namespace
}  // namespace gmslm::seg
