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

#include "gmslm/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

namespace gmslm::wav {

namespace {

std::uint32_t le32(const std::string& b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t le16(const std::string& b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

void put32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

dsp::Waveform decode(const std::string& bytes) {
  require(bytes.size() >= 12 && bytes.compare(0, 4, "RIFF") == 0 &&
              bytes.compare(8, 4, "WAVE") == 0,
          Errc::format_error, "not a RIFF/WAVE file");
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0, format = 0;
  std::uint32_t rate = 0;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t size = le32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    require(body + size <= bytes.size() || id == "data", Errc::format_error,
            "truncated chunk '" + id + "'");
    if (id == "fmt ") {
      require(size >= 16, Errc::format_error, "fmt chunk too small");
      format = le16(bytes, body);
      channels = le16(bytes, body + 2);
      rate = le32(bytes, body + 4);
      bits = le16(bytes, body + 14);
      have_fmt = true;
    } else if (id == "data") {
      require(have_fmt, Errc::format_error, "data chunk before fmt chunk");
      require(channels == 1, Errc::format_error,
              "expected mono audio, file has " + std::to_string(channels) + " channels");
      require(format == 1 && bits == 16, Errc::format_error, "only 16-bit PCM is supported");
      const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
      dsp::Waveform w;
      w.sample_rate = rate;
      w.samples.resize(avail / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i)
        w.samples[i] = static_cast<std::int16_t>(le16(bytes, body + 2 * i)) / 32768.0;
      return w;
    }
    pos = body + size + (size & 1);
  }
  throw Error(Errc::format_error, "no data chunk");
}

dsp::Waveform read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string encode(const dsp::Waveform& w) {
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  const auto rate = static_cast<std::uint32_t>(std::lround(w.sample_rate));
  std::string b;
  b.reserve(44 + 2 * n);
  b += "RIFF";
  put32(b, 36 + 2 * n);
  b += "WAVEfmt ";
  put32(b, 16);
  put16(b, 1);
  put16(b, 1);
  put32(b, rate);
  put32(b, rate * 2);
  put16(b, 2);
  put16(b, 16);
  b += "data";
  put32(b, 2 * n);
  for (double x : w.samples) {
    const double clipped = std::clamp(x, -1.0, 1.0);
    const long v = std::clamp(std::lround(clipped * 32768.0), -32768L, 32767L);
    put16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  return b;
}

void write(const std::filesystem::path& path, const dsp::Waveform& w) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), Errc::io_error, "cannot write " + path.string());
  const std::string bytes = encode(w);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

dsp::Waveform decimate(const dsp::Waveform& w, int factor) {
  require(factor >= 1, Errc::invalid_argument, "decimation factor must be >= 1");
  if (factor == 1) return w;
  constexpr int kHalf = 32;
  const double cutoff = 0.9 / factor;  // fraction of the input Nyquist
  std::vector<double> taps(2 * kHalf + 1);
  double sum = 0.0;
  for (int i = -kHalf; i <= kHalf; ++i) {
    const double x = std::numbers::pi * cutoff * i;
    const double sinc = i == 0 ? 1.0 : std::sin(x) / x;
    const double blackman = 0.42 + 0.5 * std::cos(std::numbers::pi * i / kHalf) +
                            0.08 * std::cos(2.0 * std::numbers::pi * i / kHalf);
    taps[i + kHalf] = sinc * blackman;
    sum += taps[i + kHalf];
  }
  for (double& t : taps) t /= sum;

  dsp::Waveform out;
  out.sample_rate = w.sample_rate / factor;
  const auto n = static_cast<std::ptrdiff_t>(w.samples.size());
  for (std::ptrdiff_t c = 0; c < n; c += factor) {
    double acc = 0.0;
    for (int i = -kHalf; i <= kHalf; ++i) {
      const std::ptrdiff_t j = c + i;
      if (j >= 0 && j < n) acc += taps[i + kHalf] * w.samples[j];
    }
    out.samples.push_back(acc);
  }
  return out;
}

dsp::Waveform read_16k(const std::filesystem::path& path) {
  dsp::Waveform w = read(path);
  const double ratio = w.sample_rate / dsp::kDefaultSampleRate;
  const long factor = std::lround(ratio);
  require(factor >= 1 && std::abs(ratio - factor) < 1e-9, Errc::format_error,
          path.string() + ": sample rate is not an integer multiple of 16 kHz");
  return decimate(w, static_cast<int>(factor));
}

}  // namespace gmslm::wav
