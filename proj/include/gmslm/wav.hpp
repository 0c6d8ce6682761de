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

#ifndef GMSLM_WAV_HPP_
#define GMSLM_WAV_HPP_

#include <filesystem>
#include <string>

#include "gmslm/dsp.hpp"

namespace gmslm::wav {

/// Reads a mono 16-bit PCM RIFF/WAVE file. Samples are scaled to [-1, 1).
/// Multi-channel and non-PCM16 files are rejected with format-error.
dsp::Waveform read(const std::filesystem::path& path);
dsp::Waveform decode(const std::string& bytes);

/// Writes mono 16-bit PCM; samples are clipped to [-1, 1].
void write(const std::filesystem::path& path, const dsp::Waveform& w);
std::string encode(const dsp::Waveform& w);

/// Integer-factor decimation with a windowed-sinc low-pass at 0.9 of the new
/// Nyquist frequency.
dsp::Waveform decimate(const dsp::Waveform& w, int factor);

/// Reads and, when the file rate is an integer multiple of 16 kHz, decimates
/// to 16 kHz. Any other rate is rejected.
dsp::Waveform read_16k(const std::filesystem::path& path);

}  // namespace gmslm::wav

#endif  // GMSLM_WAV_HPP_
