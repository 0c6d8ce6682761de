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


#ifndef GMSLM_MANIFEST_HPP_
#define GMSLM_MANIFEST_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace gmslm::corpus {

inline constexpr std::array<const char*, 3> kSplits{"train", "valid", "test"};

struct ManifestRecord {
  std::string path;
  double duration_s = 0.0;
  std::string split;  // train | valid | test, empty before splitting
  std::optional<std::string> caller_id;
  std::optional<std::string> receiver_id;
  std::optional<std::string> call_type;

  /// The label used for stratification: call_type, else caller_id, else "".
  std::string stratum() const;
};

void to_json(nlohmann::json& j, const ManifestRecord& r);
void from_json(const nlohmann::json& j, ManifestRecord& r);

struct CorpusManifest {
  std::vector<ManifestRecord> records;

  /// Paths unique, durations non-negative, splits empty or known.
  void validate() const;
  std::vector<const ManifestRecord*> in_split(const std::string& split) const;
};

/// JSON Lines, one record per line.
CorpusManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const CorpusManifest& m);

/// Deterministic stratified split. Within each stratum (records sorted by
/// path, then shuffled with a seeded stream) the counts are the floors of
/// ratio * n plus one extra record for the largest remainders, earlier
/// splits first on ties. Ratios are (train, valid, test) and must sum to 1.
CorpusManifest split_manifest(const CorpusManifest& m, const std::array<double, 3>& ratios,
                              std::uint64_t seed);

/// Largest-remainder allocation of n items over the ratios.
std::array<std::size_t, 3> allocate(std::size_t n, const std::array<double, 3>& ratios);

}  // namespace gmslm::corpus

#endif  // GMSLM_MANIFEST_HPP_
