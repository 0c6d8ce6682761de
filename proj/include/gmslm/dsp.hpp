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

// Signal-processing primitives: high-pass filtering, STFT magnitudes,
// MFCC / linear-band filterbank features and temporal pooling.
//
// Every function here is a pure function of its arguments.

#ifndef GMSLM_DSP_HPP_
#define GMSLM_DSP_HPP_

#include <array>
#include <string>
#include <vector>

#include "gmslm/common.hpp"

namespace gmslm::dsp {

inline constexpr double kDefaultSampleRate = 16000.0;
/// Energies are clamped to this value before taking the log.
inline constexpr double kLogFloor = 1e-10;

struct Waveform {
  std::vector<double> samples;
  double sample_rate = kDefaultSampleRate;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
  /// Throws invalid-argument on a non-positive rate or non-finite samples.
  void validate() const;
};

struct Spectrogram {
  Matrix magnitudes;  // frames x (window/2 + 1)
  int hop = 512;
  int window = 2048;
  double sample_rate = kDefaultSampleRate;

  int frames() const { return static_cast<int>(magnitudes.rows()); }
  int bins() const { return static_cast<int>(magnitudes.cols()); }
  double bin_hz(int bin) const { return bin * sample_rate / window; }
  /// Time of the centre of `frame`, in seconds.
  double frame_center_s(int frame) const {
    return (static_cast<double>(frame) * hop + 0.5 * window) / sample_rate;
  }
};

enum class FeatureKind { mfcc, linear_fb };
std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& name);

struct FeatureMatrix {
  Matrix rows;  // frames x dims
  double frame_stride_ms = 20.0;
  FeatureKind kind = FeatureKind::mfcc;
  std::string fingerprint;  // run-config fingerprint, empty when standalone

  int frames() const { return static_cast<int>(rows.rows()); }
  int dims() const { return static_cast<int>(rows.cols()); }
};

/// Per-dimension temporal mean followed by per-dimension population variance.
using PooledEmbedding = Vector;

// ---------------------------------------------------------------------------
// High-pass filter

/// One direct-form-II-transposed second-order section.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

/// Order-8 Butterworth high-pass as four cascaded sections (bilinear
/// transform with pre-warping).
std::vector<Biquad> butterworth_highpass(double cutoff_hz, double sample_rate, int order = 8);

/// Filters `w` with the order-8 Butterworth high-pass. The filter state starts
/// at the steady state for a constant input equal to the first sample, so a DC
/// offset produces no start-up transient.
Waveform highpass(const Waveform& w, double cutoff_hz);

// ---------------------------------------------------------------------------
// STFT

/// Symmetric Hann window (zero at both ends).
std::vector<double> hann_window(int length);

/// Magnitude STFT with a Hann window. Magnitudes are divided by
/// sqrt(sum(window^2)), so a white-noise bin of variance s^2 has expected
/// squared magnitude s^2.
Spectrogram stft(const Waveform& w, int window = 2048, int hop = 512);

/// Sum over frames and the full two-sided spectrum of squared magnitudes,
/// reconstructed from the one-sided bins.
double spectral_energy(const Spectrogram& spec);

// ---------------------------------------------------------------------------
// Features

struct FrameConfig {
  int window = 400;    // 25 ms at 16 kHz
  int hop = 320;       // 20 ms at 16 kHz
  int fft_size = 512;
};

/// Number of analysis frames for a signal of `length` samples. A non-empty
/// signal shorter than one window yields one zero-padded frame.
int frame_count(std::size_t length, int window, int hop);

/// Power spectra (frames x fft_size/2+1), normalized by window power.
Matrix power_frames(const Waveform& w, const FrameConfig& cfg);

struct MfccOptions {
  int n_coeffs = 13;
  int n_mel = 40;
  double low_hz = 20.0;
  double high_hz = 0.0;  // 0 means Nyquist
  FrameConfig frame;
};

/// Triangular mel filterbank weights (n_mel x fft_size/2+1), HTK mel scale.
Matrix mel_filterbank(int n_mel, int fft_size, double sample_rate, double low_hz, double high_hz);

/// Mel log-energies followed by an orthonormal DCT-II; coefficient 0 included.
FeatureMatrix mfcc(const Waveform& w, int n_coeffs = 13);
FeatureMatrix mfcc(const Waveform& w, const MfccOptions& opts);

struct LinearFbOptions {
  double lo_hz = 5000.0;
  double hi_hz = 8000.0;
  int n_filters = 13;
  FrameConfig frame;
};

/// Triangular filters whose n+2 edge points are spaced linearly in [lo, hi].
Matrix linear_filterbank(int n_filters, int fft_size, double sample_rate, double lo_hz,
                         double hi_hz);
/// Centre frequency of each linear filter.
std::vector<double> linear_filter_centers(int n_filters, double lo_hz, double hi_hz);

FeatureMatrix linear_fb(const Waveform& w, double lo_hz = 5000.0, double hi_hz = 8000.0,
                        int n_filters = 13);
FeatureMatrix linear_fb(const Waveform& w, const LinearFbOptions& opts);

/// Column means then population variances; needs at least two frames.
PooledEmbedding pool_stats(const FeatureMatrix& f);

/// Frames augmented with the half-wave rectified first difference of each
/// column (positive spectral flux). The first frame's flux is zero.
FeatureMatrix with_rising_flux(const FeatureMatrix& f);

// ---------------------------------------------------------------------------
// Text export

/// Header line "# kind=<kind> stride_ms=<ms> dims=<D>" followed by one
/// comma-separated frame per line.
std::string to_csv(const FeatureMatrix& f);
FeatureMatrix from_csv(const std::string& text);

}  // namespace gmslm::dsp

#endif  // GMSLM_DSP_HPP_
