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


#include "gmslm/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "gmslm/common.hpp"

namespace gmslm::corpus {

std::string ManifestRecord::stratum() const {
  if (call_type) return *call_type;
  if (caller_id) return *caller_id;
  return {};
}

void to_json(nlohmann::json& j, const ManifestRecord& r) {
  j = nlohmann::json{{"path", r.path}, {"duration_s", r.duration_s}, {"split", r.split}};
  if (r.caller_id) j["caller_id"] = *r.caller_id;
  if (r.receiver_id) j["receiver_id"] = *r.receiver_id;
  if (r.call_type) j["call_type"] = *r.call_type;
}

void from_json(const nlohmann::json& j, ManifestRecord& r) {
  r.path = j.at("path").get<std::string>();
  r.duration_s = j.value("duration_s", 0.0);
  r.split = j.value("split", std::string());
  auto opt = [&j](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
  };
  r.caller_id = opt("caller_id");
  r.receiver_id = opt("receiver_id");
  r.call_type = opt("call_type");
}

void CorpusManifest::validate() const {
  std::set<std::string> seen;
  for (const auto& r : records) {
    require(!r.path.empty(), Errc::invalid_argument, "manifest record without a path");
    require(seen.insert(r.path).second, Errc::invalid_argument,
            "duplicate manifest path " + r.path);
    require(r.duration_s >= 0.0, Errc::invalid_argument, "negative duration for " + r.path);
    require(r.split.empty() || std::find(kSplits.begin(), kSplits.end(), r.split) != kSplits.end(),
            Errc::invalid_argument, "unknown split '" + r.split + "' for " + r.path);
  }
}

std::vector<const ManifestRecord*> CorpusManifest::in_split(const std::string& split) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records)
    if (r.split == split) out.push_back(&r);
  return out;
}

CorpusManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io_error, "cannot open manifest " + path.string());
  CorpusManifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      m.records.push_back(nlohmann::json::parse(line).get<ManifestRecord>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::format_error,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  m.validate();
  return m;
}

void write_manifest(const std::filesystem::path& path, const CorpusManifest& m) {
  std::ofstream out(path);
  require(static_cast<bool>(out), Errc::io_error, "cannot write " + path.string());
  for (const auto& r : m.records) out << nlohmann::json(r).dump() << '\n';
}

std::array<std::size_t, 3> allocate(std::size_t n, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> rem{};
  std::size_t used = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(n);
    // Guard against 0.8 * 10 landing just below 8.
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[i] = exact - static_cast<double>(counts[i]);
    used += counts[i];
  }
  while (used < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (rem[i] > rem[best] + 1e-12) best = i;
    counts[best] += 1;
    rem[best] = -1.0;
    ++used;
  }
  return counts;
}

CorpusManifest split_manifest(const CorpusManifest& m, const std::array<double, 3>& ratios,
                              std::uint64_t seed) {
  m.validate();
  double sum = 0.0;
  for (double r : ratios) {
    require(r >= 0.0, Errc::invalid_argument, "split ratios must be non-negative");
    sum += r;
  }
  require(std::abs(sum - 1.0) < 1e-9, Errc::invalid_argument, "split ratios must sum to 1");

  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < m.records.size(); ++i) strata[m.records[i].stratum()].push_back(i);

  CorpusManifest out = m;
  for (auto& [label, members] : strata) {
    std::sort(members.begin(), members.end(), [&m](std::size_t a, std::size_t b) {
      return m.records[a].path < m.records[b].path;
    });
    Rng rng = Rng::derive(seed, "cli.split." + label);
    rng.shuffle(members);
    const auto counts = allocate(members.size(), ratios);
    std::size_t at = 0;
    for (int s = 0; s < 3; ++s)
      for (std::size_t c = 0; c < counts[s]; ++c) out.records[members[at++]].split = kSplits[s];
  }
  return out;
}

}  // namespace gmslm::corpus
