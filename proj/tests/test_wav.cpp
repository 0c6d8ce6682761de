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
#include <filesystem>
#include <numbers>

#include "gmslm/wav.hpp"

namespace gmslm::wav {
namespace {

TEST(Wav, EncodeDecodeWithinQuantization) {
  dsp::Waveform w;
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) w.samples.push_back(rng.uniform(-0.9, 0.9));
  const auto back = decode(encode(w));
  ASSERT_EQ(back.samples.size(), w.samples.size());
  EXPECT_EQ(back.sample_rate, 16000.0);
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    EXPECT_NEAR(back.samples[i], w.samples[i], 1.0 / 32768.0);
}

TEST(Wav, FileRoundTripAndRejectsGarbage) {
  const auto path = std::filesystem::temp_directory_path() / "gmslm_test_wav.wav";
  dsp::Waveform w;
  w.samples = {0.0, 0.5, -0.5, 0.25};
  write(path, w);
  EXPECT_EQ(read(path).samples.size(), 4u);
  std::filesystem::remove(path);
  EXPECT_THROW(decode("not a wave file at all"), Error);
}

TEST(Wav, DecimationKeepsInBandTone) {
  dsp::Waveform w;
  w.sample_rate = 48000.0;
  for (int i = 0; i < 48000; ++i)
    w.samples.push_back(0.5 * std::sin(2.0 * std::numbers::pi * 1000.0 * i / 48000.0));
  const auto d = decimate(w, 3);
  EXPECT_EQ(d.sample_rate, 16000.0);
  EXPECT_EQ(d.samples.size(), 16000u);
  double s = 0.0;
  for (std::size_t i = 2000; i < 14000; ++i) s += d.samples[i] * d.samples[i];
  EXPECT_NEAR(std::sqrt(s / 12000.0), 0.5 / std::sqrt(2.0), 0.01);
}

}  // namespace
}  // namespace gmslm::wav
