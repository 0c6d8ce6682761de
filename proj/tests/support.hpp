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


// Shared fixtures for the test binaries: random scenes with known
// boundaries and small independent reference implementations.

#ifndef GMSLM_TESTS_SUPPORT_HPP_
#define GMSLM_TESTS_SUPPORT_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "gmslm/common.hpp"
#include "gmslm/synthlab.hpp"

namespace gmslm::testing {

/// A 12-20 s scene with 2-5 non-overlapping calls of 0.25-4 s in the
/// 5.5-9.5 kHz band. The noise floor sits 40-55 dB below the RMS of the
/// quietest call.
inline synth::SceneSpec random_scene(std::uint64_t seed) {
  Rng rng = Rng::derive(seed, "test.scene");
  synth::SceneSpec s;
  s.total_s = rng.uniform(12.0, 20.0);
  s.seed = rng.next_u64();
  const int n = 2 + static_cast<int>(rng.below(4));
  double t = rng.uniform(0.3, 1.5);
  double quietest = 1.0;
  for (int i = 0; i < n; ++i) {
    synth::CallSpec c;
    c.duration_s = rng.uniform(0.25, 4.0);
    if (t + c.duration_s > s.total_s - 0.3) break;
    c.f0_hz = rng.uniform(5500.0, 9500.0);
    c.fm_depth_hz = rng.uniform(0.0, 150.0);
    c.fm_rate_hz = rng.uniform(0.5, 4.0);
    c.amplitude = rng.uniform(0.25, 0.6);
    quietest = std::min(quietest, c.amplitude);
    s.calls.push_back({t, c});
    t += c.duration_s + rng.uniform(0.4, 3.0);
  }
  s.noise_floor_db = 20.0 * std::log10(quietest / std::sqrt(2.0)) - rng.uniform(40.0, 55.0);
  return s;
}

/// A pure tone of the given length with 10 ms ramps and a -60 dB floor.
inline synth::SceneSpec tone_scene(double onset_s, double duration_s, double total_s,
                                   double f0_hz = 7000.0) {
  synth::SceneSpec s;
  s.total_s = total_s;
  s.noise_floor_db = -60.0;
  synth::CallSpec c;
  c.f0_hz = f0_hz;
  c.duration_s = duration_s;
  c.fm_depth_hz = 0.0;
  s.calls.push_back({onset_s, c});
  return s;
}

}  // namespace gmslm::testing

#endif  // GMSLM_TESTS_SUPPORT_HPP_
