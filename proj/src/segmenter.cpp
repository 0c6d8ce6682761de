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

#include "gmslm/segmenter.hpp"

#include <algorithm>
#include <cmath>

namespace gmslm::seg {

namespace {

constexpr double kTimeEps = 1e-9;

struct Run {
  int first;
  int last;  // inclusive
};

std::vector<Run> runs_of(const std::vector<bool>& mask) {
  std::vector<Run> runs;
  const int n = static_cast<int>(mask.size());
  for (int i = 0; i < n;) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && mask[j + 1]) ++j;
    runs.push_back({i, j});
    i = j + 1;
  }
  return runs;
}

// Moving RMS of x over `half` samples either side, via prefix sums.
std::vector<double> moving_rms(const std::vector<double>& x, std::size_t half) {
  std::vector<double> prefix(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i] * x[i];
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t a = i >= half ? i - half : 0, b = std::min(x.size(), i + half + 1);
    out[i] = std::sqrt((prefix[b] - prefix[a]) / static_cast<double>(b - a));
  }
  return out;
}

}  // namespace

void DetectorParams::validate() const {
  require(energy_floor >= 0.0 && noise_var_max >= 0.0 && noise_density_min >= 0.0,
          Errc::invalid_argument, "detector thresholds must be non-negative");
  require(noise_dur_lo < noise_dur_hi, Errc::invalid_argument, "noise duration band is empty");
  require(call_dur_lo < call_dur_hi, Errc::invalid_argument, "call duration band is empty");
  require(band_lo_hz < band_hi_hz, Errc::invalid_argument, "analysis band is empty");
  require(hop >= 1 && window >= hop, Errc::invalid_argument, "need window >= hop >= 1");
  require(min_gap_frames >= 0, Errc::invalid_argument, "min_gap_frames must be >= 0");
  require(edge_db < 0.0, Errc::invalid_argument, "edge_db must be negative");
  require(edge_smooth_s > 0.0, Errc::invalid_argument, "edge_smooth_s must be positive");
}

void to_json(nlohmann::json& j, const DetectorParams& p) {
  j = nlohmann::json{{"energy_floor", p.energy_floor},
                     {"noise_var_max", p.noise_var_max},
                     {"noise_density_min", p.noise_density_min},
                     {"noise_dur_band", {p.noise_dur_lo, p.noise_dur_hi}},
                     {"call_dur_band", {p.call_dur_lo, p.call_dur_hi}},
                     {"highpass_hz", p.highpass_hz},
                     {"band_hz", {p.band_lo_hz, p.band_hi_hz}},
                     {"min_gap_frames", p.min_gap_frames},
                     {"window", p.window},
                     {"hop", p.hop},
                     {"edge_db", p.edge_db},
                     {"edge_smooth_s", p.edge_smooth_s}};
}

void from_json(const nlohmann::json& j, DetectorParams& p) {
  DetectorParams d;
  p.energy_floor = j.value("energy_floor", d.energy_floor);
  p.noise_var_max = j.value("noise_var_max", d.noise_var_max);
  p.noise_density_min = j.value("noise_density_min", d.noise_density_min);
  if (j.contains("noise_dur_band")) {
    p.noise_dur_lo = j["noise_dur_band"].at(0);
    p.noise_dur_hi = j["noise_dur_band"].at(1);
  }
  if (j.contains("call_dur_band")) {
    p.call_dur_lo = j["call_dur_band"].at(0);
    p.call_dur_hi = j["call_dur_band"].at(1);
  }
  if (j.contains("band_hz")) {
    p.band_lo_hz = j["band_hz"].at(0);
    p.band_hi_hz = j["band_hz"].at(1);
  }
  p.highpass_hz = j.value("highpass_hz", d.highpass_hz);
  p.min_gap_frames = j.value("min_gap_frames", d.min_gap_frames);
  p.window = j.value("window", d.window);
  p.hop = j.value("hop", d.hop);
  p.edge_db = j.value("edge_db", d.edge_db);
  p.edge_smooth_s = j.value("edge_smooth_s", d.edge_smooth_s);
}

std::vector<CallSegment> detect_calls(const dsp::Waveform& w, const DetectorParams& p) {
  return detect_calls(w, p, nullptr);
}

std::vector<CallSegment> detect_calls(const dsp::Waveform& w, const DetectorParams& p,
                                      DetectionTrace* trace) {
  p.validate();
  if (w.samples.size() < static_cast<std::size_t>(p.window)) return {};

  const dsp::Waveform filtered = dsp::highpass(w, p.highpass_hz);
  const dsp::Spectrogram spec = dsp::stft(filtered, p.window, p.hop);
  const int frames = spec.frames();
  const double frame_s = static_cast<double>(p.hop) / w.sample_rate;

  int bin_lo = static_cast<int>(std::ceil(p.band_lo_hz * p.window / w.sample_rate));
  int bin_hi = static_cast<int>(std::floor(p.band_hi_hz * p.window / w.sample_rate));
  bin_lo = std::clamp(bin_lo, 0, spec.bins() - 1);
  bin_hi = std::clamp(bin_hi, bin_lo, spec.bins() - 1);
  const int band = bin_hi - bin_lo + 1;

  DetectionTrace local;
  DetectionTrace& t = trace ? *trace : local;
  t = DetectionTrace{};
  t.frame_seconds = frame_s;
  t.density.resize(frames);
  t.variance.resize(frames);
  t.energetic.resize(frames);
  t.noise.assign(frames, false);
  t.active.resize(frames);

  std::vector<bool> candidate(frames);
  for (int f = 0; f < frames; ++f) {
    int above = 0;
    double sum = 0.0, sum_sq = 0.0;
    for (int k = bin_lo; k <= bin_hi; ++k) {
      double m = spec.magnitudes(f, k);
      if (m < p.energy_floor) m = 0.0;
      else ++above;
      sum += m;
      sum_sq += m * m;
    }
    const double mean = sum / band;
    t.density[f] = static_cast<double>(above) / band;
    t.variance[f] = std::max(0.0, sum_sq / band - mean * mean);
    t.energetic[f] = above > 0;
    candidate[f] = t.variance[f] < p.noise_var_max && t.density[f] > p.noise_density_min;
  }

  for (const Run& r : runs_of(candidate)) {
    const double dur = (r.last - r.first + 1) * frame_s;
    if (dur < p.noise_dur_lo - kTimeEps || dur > p.noise_dur_hi + kTimeEps)
      for (int f = r.first; f <= r.last; ++f) t.noise[f] = true;
  }
  for (int f = 0; f < frames; ++f) t.active[f] = t.energetic[f] && !t.noise[f];

  std::vector<Run> runs;
  for (const Run& r : runs_of(t.active)) {
    if (!runs.empty() && r.first - runs.back().last - 1 < p.min_gap_frames)
      runs.back().last = r.last;
    else
      runs.push_back(r);
  }

  // Boundaries at sample resolution: the outermost points inside the frames'
  // support where the smoothed envelope is within edge_db of the run's peak.
  const auto half = static_cast<std::size_t>(std::max(1.0, std::round(p.edge_smooth_s * w.sample_rate / 2.0)));
  const std::vector<double> env = moving_rms(filtered.samples, half);
  const double edge = std::pow(10.0, p.edge_db / 20.0);
  const std::size_t n = env.size();
  std::vector<CallSegment> out;
  for (const Run& r : runs) {
    const std::size_t a = static_cast<std::size_t>(r.first) * static_cast<std::size_t>(p.hop);
    const std::size_t b = std::min(n, static_cast<std::size_t>(r.last) * static_cast<std::size_t>(p.hop) +
                                          static_cast<std::size_t>(p.window));
    const double peak = *std::max_element(env.begin() + a, env.begin() + b);
    std::size_t on = a, off = b - 1;
    while (on < off && env[on] < edge * peak) ++on;
    while (off > on && env[off] < edge * peak) --off;
    const CallSegment s{static_cast<double>(on) / w.sample_rate,
                        static_cast<double>(off + 1) / w.sample_rate};
    const double dur = s.duration_s();
    if (dur >= p.call_dur_lo - kTimeEps && dur <= p.call_dur_hi + kTimeEps) out.push_back(s);
  }
  return out;
}

std::vector<SegmentWindow> pack_windows(const dsp::Waveform& w,
                                        const std::vector<CallSegment>& calls) {
  for (std::size_t i = 0; i < calls.size(); ++i) {
    require(calls[i].offset_s > calls[i].onset_s, Errc::invalid_argument,
            "call offset must follow its onset");
    require(calls[i].duration_s() <= kMaxWindowSeconds + kTimeEps, Errc::invalid_argument,
            "call longer than one window");
    if (i > 0)
      require(calls[i].onset_s >= calls[i - 1].offset_s, Errc::invalid_argument,
              "calls must be sorted and non-overlapping");
  }
  const double total = w.duration_s();
  std::vector<SegmentWindow> windows;
  std::size_t i = 0;
  while (i < calls.size()) {
    SegmentWindow win;
    win.start_s = calls[i].onset_s;
    const double limit = win.start_s + kMaxWindowSeconds;
    while (i < calls.size() && calls[i].offset_s <= limit + kTimeEps) {
      win.calls.push_back({calls[i].onset_s - win.start_s, calls[i].offset_s - win.start_s});
      ++i;
    }
    win.end_s = total > 0.0 ? std::min(limit, total) : limit;
    win.end_s = std::max(win.end_s, win.start_s + win.calls.back().offset_s);
    windows.push_back(std::move(win));
  }
  return windows;
}

DetectionScore score_detection(const std::vector<CallSegment>& pred,
                               const std::vector<CallSegment>& truth, double tol_s) {
  require(tol_s > 0.0, Errc::invalid_argument, "tolerance must be positive");
  std::vector<bool> used(truth.size(), false);
  int matches = 0;
  for (const CallSegment& p : pred) {
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(p.onset_s - truth[j].onset_s) <= tol_s + kTimeEps &&
          std::abs(p.offset_s - truth[j].offset_s) <= tol_s + kTimeEps) {
        used[j] = true;
        ++matches;
        break;
      }
    }
  }
  DetectionScore s;
  s.matches = matches;
  s.precision = pred.empty() ? (truth.empty() ? 1.0 : 0.0)
                             : static_cast<double>(matches) / pred.size();
  s.recall = truth.empty() ? 1.0 : static_cast<double>(matches) / truth.size();
  return s;
}

}  // namespace gmslm::seg
