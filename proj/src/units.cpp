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

#include "gmslm/units.hpp"

#include <fstream>
#include <sstream>

#include "gmslm/common.hpp"

namespace gmslm::units {

RunLengths dedup(const UnitSequence& u) {
  RunLengths runs;
  for (int tok : u) {
    if (!runs.empty() && runs.back().token == tok)
      ++runs.back().length;
    else
      runs.push_back({tok, 1});
  }
  return runs;
}

UnitSequence expand(const RunLengths& runs) {
  UnitSequence out;
  for (const Run& r : runs) {
    require(r.length >= 1, Errc::invalid_argument, "run length must be >= 1");
    out.insert(out.end(), static_cast<std::size_t>(r.length), r.token);
  }
  return out;
}

UnitSequence collapsed(const UnitSequence& u) {
  UnitSequence out;
  for (const Run& r : dedup(u)) out.push_back(r.token);
  return out;
}

void check_range(const UnitSequence& u, int k) {
  for (int tok : u)
    require(tok >= 0 && tok < k, Errc::out_of_vocabulary,
            "token " + std::to_string(tok) + " outside [0, " + std::to_string(k) + ")");
}

std::string to_text(const std::vector<UnitSequence>& seqs, const std::string& fingerprint) {
  std::ostringstream os;
  if (!fingerprint.empty()) os << "# fingerprint=" << fingerprint << '\n';
  for (const auto& s : seqs) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) os << ' ';
      os << s[i];
    }
    os << '\n';
  }
  return os.str();
}

std::vector<UnitSequence> from_text(const std::string& text, std::string* fingerprint) {
  std::vector<UnitSequence> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] == '#') {
      const std::string key = "# fingerprint=";
      if (fingerprint && line.rfind(key, 0) == 0) *fingerprint = line.substr(key.size());
      continue;
    }
    UnitSequence s;
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      require(used == tok.size(), Errc::format_error, "bad unit token '" + tok + "'");
      s.push_back(v);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::vector<UnitSequence>& seqs,
                const std::string& fingerprint) {
  std::ofstream out(path);
  require(static_cast<bool>(out), Errc::io_error, "cannot write " + path.string());
  out << to_text(seqs, fingerprint);
}

std::vector<UnitSequence> read_file(const std::filesystem::path& path, std::string* fingerprint) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str(), fingerprint);
}

}  // namespace gmslm::units
