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

#include "gmslm/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

namespace gmslm::dsp {

namespace {

// FFTW plans are created under a lock (the planner is not thread-safe) and
// executed through the new-array interface, which is.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto& cache = plans();
    auto it = cache.find(n);
    if (it == cache.end()) {
      double* in = fftw_alloc_real(static_cast<std::size_t>(n));
      fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
      fftw_plan p = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
      fftw_free(in);
      fftw_free(out);
      it = cache.emplace(n, p).first;
    }
    plan_ = it->second;
  }

  int size() const { return n_; }

  // in has n_ reals, out receives n_/2+1 complex values.
  void forward(double* in, std::complex<double>* out) const {
    fftw_execute_dft_r2c(plan_, in, reinterpret_cast<fftw_complex*>(out));
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }
  static std::map<int, fftw_plan>& plans() {
    static std::map<int, fftw_plan> p;
    return p;
  }

  int n_;
  fftw_plan plan_;
};

double window_power(const std::vector<double>& win) {
  double s = 0.0;
  for (double v : win) s += v * v;
  return s;
}

}  // namespace

void Waveform::validate() const {
  require(sample_rate > 0.0 && std::isfinite(sample_rate), Errc::invalid_argument,
          "sample rate must be positive");
  for (double v : samples)
    require(std::isfinite(v), Errc::invalid_argument, "waveform contains a non-finite sample");
}

std::string to_string(FeatureKind kind) {
  return kind == FeatureKind::mfcc ? "mfcc" : "linear_fb";
}

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "mfcc") return FeatureKind::mfcc;
  if (name == "linear_fb") return FeatureKind::linear_fb;
  throw Error(Errc::invalid_argument, "unknown feature kind '" + name + "'");
}

std::vector<Biquad> butterworth_highpass(double cutoff_hz, double sample_rate, int order) {
  require(order > 0 && order % 2 == 0, Errc::invalid_argument, "order must be even");
  require(cutoff_hz > 0.0 && cutoff_hz < sample_rate / 2.0, Errc::invalid_argument,
          "cutoff must lie in (0, Nyquist)");
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate);
  std::vector<Biquad> sections;
  for (int i = 0; i < order / 2; ++i) {
    const double q = 1.0 / (2.0 * std::cos(std::numbers::pi * (2 * i + 1) / (2.0 * order)));
    const double norm = 1.0 / (1.0 + k / q + k * k);
    sections.push_back({norm, -2.0 * norm, norm, 2.0 * (k * k - 1.0) * norm,
                        (1.0 - k / q + k * k) * norm});
  }
  return sections;
}

Waveform highpass(const Waveform& w, double cutoff_hz) {
  w.validate();
  const auto sections = butterworth_highpass(cutoff_hz, w.sample_rate);
  Waveform out{w.samples, w.sample_rate};
  if (out.samples.empty()) return out;

  double steady_in = out.samples.front();
  for (const Biquad& s : sections) {
    const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double steady_out = gain * steady_in;
    double z2 = s.b2 * steady_in - s.a2 * steady_out;
    double z1 = s.b1 * steady_in - s.a1 * steady_out + z2;
    for (double& x : out.samples) {
      const double y = s.b0 * x + z1;
      z1 = s.b1 * x - s.a1 * y + z2;
      z2 = s.b2 * x - s.a2 * y;
      x = y;
    }
    steady_in = steady_out;
  }
  return out;
}

std::vector<double> hann_window(int length) {
  std::vector<double> win(static_cast<std::size_t>(length), 1.0);
  if (length <= 1) return win;
  for (int n = 0; n < length; ++n)
    win[static_cast<std::size_t>(n)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (length - 1));
  return win;
}

Spectrogram stft(const Waveform& w, int window, int hop) {
  w.validate();
  require(hop >= 1 && window >= hop, Errc::invalid_argument, "need window >= hop >= 1");
  require(w.samples.size() >= static_cast<std::size_t>(window), Errc::empty_spectrogram,
          "signal shorter than one analysis window");

  const int frames = 1 + static_cast<int>((w.samples.size() - window) / hop);
  const int bins = window / 2 + 1;
  const auto win = hann_window(window);
  const double scale = 1.0 / std::sqrt(window_power(win));

  Spectrogram spec;
  spec.hop = hop;
  spec.window = window;
  spec.sample_rate = w.sample_rate;
  spec.magnitudes.resize(frames, bins);

  RealFft fft(window);
  std::vector<double> buf(static_cast<std::size_t>(window));
  std::vector<std::complex<double>> out(static_cast<std::size_t>(bins));
  for (int f = 0; f < frames; ++f) {
    const double* src = w.samples.data() + static_cast<std::ptrdiff_t>(f) * hop;
    for (int n = 0; n < window; ++n) buf[n] = src[n] * win[n];
    fft.forward(buf.data(), out.data());
    for (int k = 0; k < bins; ++k) spec.magnitudes(f, k) = std::abs(out[k]) * scale;
  }
  return spec;
}

double spectral_energy(const Spectrogram& spec) {
  double total = 0.0;
  const int last = spec.bins() - 1;
  const bool has_nyquist = spec.window % 2 == 0;
  for (int f = 0; f < spec.frames(); ++f) {
    for (int k = 0; k <= last; ++k) {
      const double m = spec.magnitudes(f, k);
      const bool single = k == 0 || (has_nyquist && k == last);
      total += (single ? 1.0 : 2.0) * m * m;
    }
  }
  return total;
}

int frame_count(std::size_t length, int window, int hop) {
  if (length == 0) return 0;
  if (length < static_cast<std::size_t>(window)) return 1;
  return 1 + static_cast<int>((length - window) / hop);
}

Matrix power_frames(const Waveform& w, const FrameConfig& cfg) {
  w.validate();
  require(cfg.hop >= 1 && cfg.window >= cfg.hop && cfg.fft_size >= cfg.window,
          Errc::invalid_argument, "need fft_size >= window >= hop >= 1");
  const int frames = frame_count(w.samples.size(), cfg.window, cfg.hop);
  const int bins = cfg.fft_size / 2 + 1;
  Matrix power(frames, bins);
  if (frames == 0) return power;

  const auto win = hann_window(cfg.window);
  const double scale = 1.0 / window_power(win);
  RealFft fft(cfg.fft_size);
  std::vector<double> buf(static_cast<std::size_t>(cfg.fft_size));
  std::vector<std::complex<double>> out(static_cast<std::size_t>(bins));
  const std::size_t len = w.samples.size();
  for (int f = 0; f < frames; ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    const std::size_t start = static_cast<std::size_t>(f) * cfg.hop;
    for (int n = 0; n < cfg.window && start + n < len; ++n)
      buf[n] = w.samples[start + n] * win[n];
    fft.forward(buf.data(), out.data());
    for (int k = 0; k < bins; ++k) power(f, k) = std::norm(out[k]) * scale;
  }
  return power;
}

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters on FFT bin frequencies, given n+2 ascending edge points.
Matrix triangular_filters(const std::vector<double>& edges, int fft_size, double sample_rate) {
  const int n = static_cast<int>(edges.size()) - 2;
  const int bins = fft_size / 2 + 1;
  Matrix weights = Matrix::Zero(n, bins);
  for (int m = 0; m < n; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = k * sample_rate / fft_size;
      if (f > lo && f < hi) weights(m, k) = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
  return weights;
}

Matrix log_energies(const Matrix& power, const Matrix& weights) {
  Matrix e = power * weights.transpose();
  return e.unaryExpr([](double v) { return std::log(std::max(v, kLogFloor)); });
}

}  // namespace

Matrix mel_filterbank(int n_mel, int fft_size, double sample_rate, double low_hz, double high_hz) {
  require(n_mel >= 1, Errc::invalid_argument, "n_mel must be positive");
  require(0.0 <= low_hz && low_hz < high_hz && high_hz <= sample_rate / 2.0,
          Errc::invalid_argument, "mel band must satisfy 0 <= low < high <= Nyquist");
  const double mlo = hz_to_mel(low_hz), mhi = hz_to_mel(high_hz);
  std::vector<double> edges(static_cast<std::size_t>(n_mel + 2));
  for (int i = 0; i < n_mel + 2; ++i)
    edges[i] = mel_to_hz(mlo + (mhi - mlo) * i / (n_mel + 1));
  return triangular_filters(edges, fft_size, sample_rate);
}

FeatureMatrix mfcc(const Waveform& w, int n_coeffs) {
  MfccOptions opts;
  opts.n_coeffs = n_coeffs;
  return mfcc(w, opts);
}

FeatureMatrix mfcc(const Waveform& w, const MfccOptions& opts) {
  require(opts.n_coeffs >= 8 && opts.n_coeffs <= 40, Errc::invalid_argument,
          "n_coeffs must lie in [8, 40]");
  require(opts.n_mel >= opts.n_coeffs, Errc::invalid_argument, "n_mel must be >= n_coeffs");
  const double high = opts.high_hz > 0.0 ? opts.high_hz : w.sample_rate / 2.0;

  FeatureMatrix out;
  out.kind = FeatureKind::mfcc;
  out.frame_stride_ms = 1000.0 * opts.frame.hop / w.sample_rate;
  const Matrix power = power_frames(w, opts.frame);
  if (power.rows() == 0) {
    out.rows.resize(0, opts.n_coeffs);
    return out;
  }
  const Matrix fbank = mel_filterbank(opts.n_mel, opts.frame.fft_size, w.sample_rate,
                                      opts.low_hz, high);
  const Matrix logmel = log_energies(power, fbank);

  // Orthonormal DCT-II basis, n_coeffs x n_mel.
  Matrix dct(opts.n_coeffs, opts.n_mel);
  for (int c = 0; c < opts.n_coeffs; ++c) {
    const double norm = std::sqrt((c == 0 ? 1.0 : 2.0) / opts.n_mel);
    for (int m = 0; m < opts.n_mel; ++m)
      dct(c, m) = norm * std::cos(std::numbers::pi * c * (m + 0.5) / opts.n_mel);
  }
  out.rows = logmel * dct.transpose();
  return out;
}

std::vector<double> linear_filter_centers(int n_filters, double lo_hz, double hi_hz) {
  std::vector<double> centers(static_cast<std::size_t>(n_filters));
  for (int i = 0; i < n_filters; ++i)
    centers[i] = lo_hz + (hi_hz - lo_hz) * (i + 1) / (n_filters + 1);
  return centers;
}

Matrix linear_filterbank(int n_filters, int fft_size, double sample_rate, double lo_hz,
                         double hi_hz) {
  require(n_filters >= 1, Errc::invalid_argument, "n_filters must be positive");
  require(0.0 < lo_hz && lo_hz < hi_hz && hi_hz <= sample_rate / 2.0, Errc::invalid_argument,
          "filterbank band must satisfy 0 < lo < hi <= Nyquist");
  std::vector<double> edges(static_cast<std::size_t>(n_filters + 2));
  for (int i = 0; i < n_filters + 2; ++i)
    edges[i] = lo_hz + (hi_hz - lo_hz) * i / (n_filters + 1);
  return triangular_filters(edges, fft_size, sample_rate);
}

FeatureMatrix linear_fb(const Waveform& w, double lo_hz, double hi_hz, int n_filters) {
  LinearFbOptions opts;
  opts.lo_hz = lo_hz;
  opts.hi_hz = hi_hz;
  opts.n_filters = n_filters;
  return linear_fb(w, opts);
}

FeatureMatrix linear_fb(const Waveform& w, const LinearFbOptions& opts) {
  const Matrix fbank = linear_filterbank(opts.n_filters, opts.frame.fft_size, w.sample_rate,
                                         opts.lo_hz, opts.hi_hz);
  FeatureMatrix out;
  out.kind = FeatureKind::linear_fb;
  out.frame_stride_ms = 1000.0 * opts.frame.hop / w.sample_rate;
  const Matrix power = power_frames(w, opts.frame);
  if (power.rows() == 0) {
    out.rows.resize(0, opts.n_filters);
    return out;
  }
  out.rows = log_energies(power, fbank);
  return out;
}

PooledEmbedding pool_stats(const FeatureMatrix& f) {
  require(f.frames() >= 2, Errc::insufficient_frames, "pooling needs at least two frames");
  const Eigen::RowVectorXd mean = f.rows.colwise().mean();
  const Matrix centered = f.rows.rowwise() - mean;
  const Eigen::RowVectorXd var = centered.array().square().colwise().sum() / f.frames();
  PooledEmbedding out(2 * f.dims());
  out.head(f.dims()) = mean.transpose();
  out.tail(f.dims()) = var.transpose();
  return out;
}

FeatureMatrix with_rising_flux(const FeatureMatrix& f) {
  FeatureMatrix out;
  out.kind = f.kind;
  out.frame_stride_ms = f.frame_stride_ms;
  out.rows = Matrix::Zero(f.frames(), 2 * f.dims());
  out.rows.leftCols(f.dims()) = f.rows;
  for (int t = 1; t < f.frames(); ++t)
    out.rows.row(t).tail(f.dims()) = (f.rows.row(t) - f.rows.row(t - 1)).cwiseMax(0.0);
  return out;
}

std::string to_csv(const FeatureMatrix& f) {
  std::ostringstream os;
  os << "# kind=" << to_string(f.kind) << " stride_ms=" << format_double(f.frame_stride_ms)
     << " dims=" << f.dims();
  if (!f.fingerprint.empty()) os << " fingerprint=" << f.fingerprint;
  os << '\n';
  for (int t = 0; t < f.frames(); ++t) {
    for (int d = 0; d < f.dims(); ++d) {
      if (d) os << ',';
      os << format_double(f.rows(t, d));
    }
    os << '\n';
  }
  return os.str();
}

FeatureMatrix from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string header;
  require(static_cast<bool>(std::getline(is, header)) && header.rfind("# ", 0) == 0,
          Errc::format_error, "feature file lacks a header line");
  FeatureMatrix f;
  int dims = -1;
  std::istringstream hs(header.substr(2));
  std::string field;
  while (hs >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "kind") f.kind = parse_feature_kind(value);
    else if (key == "stride_ms") f.frame_stride_ms = std::stod(value);
    else if (key == "dims") dims = std::stoi(value);
    else if (key == "fingerprint") f.fingerprint = value;
  }
  require(dims >= 0, Errc::format_error, "feature header lacks dims");

  std::vector<double> values;
  std::string line;
  int frames = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    int count = 0;
    while (std::getline(ls, cell, ',')) {
      values.push_back(std::stod(cell));
      ++count;
    }
    require(count == dims, Errc::format_error, "feature row has the wrong number of columns");
    ++frames;
  }
  f.rows = Eigen::Map<Matrix>(values.data(), frames, dims);
  return f;
}

}  // namespace gmslm::dsp
