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

#include "gmslm/common.hpp"
#include "gmslm/units.hpp"

namespace gmslm::units {
namespace {

TEST(Dedup, Examples) {
  EXPECT_EQ(dedup({5, 5, 5, 2, 2}), (RunLengths{{5, 3}, {2, 2}}));
  EXPECT_TRUE(dedup({}).empty());
  EXPECT_EQ(collapsed({1, 1, 2, 1}), (UnitSequence{1, 2, 1}));
}

TEST(Dedup, RoundTripAndNoAdjacentRepeats) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    UnitSequence x(rng.below(40));
    for (int& t : x) t = static_cast<int>(rng.below(4));
    const auto runs = dedup(x);
    EXPECT_EQ(expand(runs), x);
    for (std::size_t i = 1; i < runs.size(); ++i) EXPECT_NE(runs[i].token, runs[i - 1].token);
    for (const auto& r : runs) EXPECT_GE(r.length, 1);
  }
}

TEST(CheckRange, RejectsOutOfRange) {
  EXPECT_NO_THROW(check_range({0, 3}, 4));
  EXPECT_THROW(check_range({0, 4}, 4), Error);
  EXPECT_THROW(check_range({-1}, 4), Error);
}

TEST(Text, RoundTripWithFingerprint) {
  const std::vector<UnitSequence> seqs{{1, 2, 3}, {}, {0}};
  std::string fp;
  const auto back = from_text(to_text(seqs, "abc"), &fp);
  EXPECT_EQ(back, seqs);
  EXPECT_EQ(fp, "abc");
}

}  // namespace
}  // namespace gmslm::units
