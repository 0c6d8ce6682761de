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

#ifndef GMSLM_UNITS_HPP_
#define GMSLM_UNITS_HPP_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace gmslm::units {

/// Discrete unit tokens in [0, K).
using UnitSequence = std::vector<int>;

struct Run {
  int token = 0;
  int length = 1;
  bool operator==(const Run&) const = default;
};
using RunLengths = std::vector<Run>;

/// Collapses adjacent repetitions, recording run lengths.
RunLengths dedup(const UnitSequence& u);
UnitSequence expand(const RunLengths& runs);
/// Tokens of dedup(u) without the lengths.
UnitSequence collapsed(const UnitSequence& u);

/// Throws invalid-argument if any token lies outside [0, k).
void check_range(const UnitSequence& u, int k);

/// One sequence per line, tokens separated by single spaces. Lines starting
/// with '#' carry metadata (e.g. "# fingerprint=...") and are skipped on read.
std::string to_text(const std::vector<UnitSequence>& seqs, const std::string& fingerprint = {});
std::vector<UnitSequence> from_text(const std::string& text, std::string* fingerprint = nullptr);

void write_file(const std::filesystem::path& path, const std::vector<UnitSequence>& seqs,
                const std::string& fingerprint = {});
std::vector<UnitSequence> read_file(const std::filesystem::path& path,
                                    std::string* fingerprint = nullptr);

}  // namespace gmslm::units

#endif  // GMSLM_UNITS_HPP_
