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

// Call detection for high-frequency contact calls.
//
// The detector runs a fixed sequence of stages:
//   1. high-pass filter at `highpass_hz`;
//   2. magnitude STFT (2048-sample window, 512-sample hop);
//   3. bins below `energy_floor` are zeroed;
//   4. a frame is a noise candidate when, inside the analysis band, the
//      variance of its surviving magnitudes is below `noise_var_max` and the
//      fraction of surviving bins is above `noise_density_min`;
//   5. contiguous runs of noise candidates shorter than noise_dur_lo or
//      longer than noise_dur_hi are classified as noise and removed;
//   6. the remaining frames with at least one surviving in-band bin are
//      active; runs of active frames separated by fewer than `min_gap_frames`
//      inactive frames are merged, and runs whose duration falls outside
//      [call_dur_lo, call_dur_hi] are dropped;
//   7. onset / offset are the centre times of the first / last frame of each
//      kept run.

#ifndef GMSLM_SEGMENTER_HPP_
#define GMSLM_SEGMENTER_HPP_

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gmslm/dsp.hpp"

namespace gmslm::seg {

struct CallSegment {
  double onset_s = 0.0;
  double offset_s = 0.0;

  double duration_s() const { return offset_s - onset_s; }
  bool operator==(const CallSegment&) const = default;
};

struct SegmentWindow {
  double start_s = 0.0;
  double end_s = 0.0;
  std::vector<CallSegment> calls;  // relative to start_s
};

inline constexpr double kMaxWindowSeconds = 10.0;

struct DetectorParams {
  double energy_floor = 0.75;
  double noise_var_max = 50.0;
  double noise_density_min = 0.25;
  double noise_dur_lo = 0.5;
  double noise_dur_hi = 2.0;
  double call_dur_lo = 0.25;
  double call_dur_hi = 4.0;
  double highpass_hz = 5000.0;
  double band_lo_hz = 5000.0;
  double band_hi_hz = 10000.0;
  int min_gap_frames = 2;
  int window = 2048;
  int hop = 512;
  double edge_db = -20.0;        // boundary level relative to the segment peak
  double edge_smooth_s = 0.005;  // envelope smoothing for boundary search

  void validate() const;
};

void to_json(nlohmann::json& j, const DetectorParams& p);
void from_json(const nlohmann::json& j, DetectorParams& p);

/// Per-frame intermediate results of the detector.
struct DetectionTrace {
  std::vector<double> density;   // fraction of in-band bins above the floor
  std::vector<double> variance;  // variance of floored in-band magnitudes
  std::vector<bool> energetic;   // at least one in-band bin above the floor
  std::vector<bool> noise;       // removed by the noise stage
  std::vector<bool> active;      // energetic and not noise
  double frame_seconds = 0.0;
};

std::vector<CallSegment> detect_calls(const dsp::Waveform& w, const DetectorParams& p);
std::vector<CallSegment> detect_calls(const dsp::Waveform& w, const DetectorParams& p,
                                      DetectionTrace* trace);

/// Greedy left-to-right packing into windows of at most ten seconds. Each
/// window opens at the first unassigned call and takes every following call
/// that ends inside it. The window end is clipped to the signal length.
std::vector<SegmentWindow> pack_windows(const dsp::Waveform& w,
                                        const std::vector<CallSegment>& calls);

struct DetectionScore {
  double precision = 0.0;
  double recall = 0.0;
  int matches = 0;
};

/// Greedy one-to-one matching: each prediction, in order, takes the first
/// unmatched truth segment whose onset and offset are both within tol_s.
DetectionScore score_detection(const std::vector<CallSegment>& pred,
                               const std::vector<CallSegment>& truth, double tol_s = 0.05);

}  // namespace gmslm::seg

#endif  // GMSLM_SEGMENTER_HPP_
