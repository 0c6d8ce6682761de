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


// Zero-shot benchmark pairs: a real sample (positive) against a manipulated
// one (distractor), and the pairwise accuracy of a scorer on them.

#ifndef GMSLM_BENCH_HPP_
#define GMSLM_BENCH_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmslm/dsp.hpp"
#include "gmslm/lm.hpp"
#include "gmslm/segmenter.hpp"
#include "gmslm/units.hpp"

namespace gmslm::bench {

enum class Task { shuffle, concat, reversal, caller_change, receiver_change };

std::string to_string(Task t);
Task parse_task(const std::string& s);

struct Side {
  std::string ref;
  std::optional<units::UnitSequence> units;
};

struct BenchmarkPair {
  Task task = Task::shuffle;
  Side positive;
  Side distractor;
  std::uint64_t seed = 0;
  nlohmann::json provenance = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const BenchmarkPair& p);
void from_json(const nlohmann::json& j, BenchmarkPair& p);
void write_pairs(const std::filesystem::path& path, const std::vector<BenchmarkPair>& pairs);
std::vector<BenchmarkPair> read_pairs(const std::filesystem::path& path);

/// Half-open index range [begin, end) into samples or tokens.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

/// A uniformly random permutation of 0..n-1 other than the identity (n >= 2).
std::vector<int> non_identity_permutation(int n, Rng& rng);

/// Rebuilds `x` with the spans re-placed in `order`: slot i receives span
/// order[i], and everything between spans stays where it was.
template <typename T>
std::vector<T> permute_spans(const std::vector<T>& x, const std::vector<Span>& spans,
                             const std::vector<int>& order) {
  std::vector<T> out;
  out.reserve(x.size());
  std::size_t at = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    out.insert(out.end(), x.begin() + at, x.begin() + spans[i].begin);
    const Span& s = spans[order[i]];
    out.insert(out.end(), x.begin() + s.begin, x.begin() + s.end);
    at = spans[i].end;
  }
  out.insert(out.end(), x.begin() + at, x.end());
  return out;
}

/// Sample spans of the calls of a window whose audio starts at window start.
std::vector<Span> call_spans(const seg::SegmentWindow& w, double sample_rate,
                             std::size_t n_samples);

/// A unit sequence with the token spans of its calls.
struct UnitWindow {
  units::UnitSequence tokens;
  std::vector<Span> calls;
  void validate() const;
};

struct Shuffled {
  dsp::Waveform audio;
  std::vector<int> order;  // slot -> original call index
};

/// Re-places the calls in a random non-identity order; gaps keep their
/// original durations and positions in sequence. Needs >= 2 calls.
Shuffled make_shuffle(const seg::SegmentWindow& w, const dsp::Waveform& audio,
                      std::uint64_t seed);
UnitWindow shuffle_units(const UnitWindow& w, std::uint64_t seed,
                         std::vector<int>* order = nullptr);

struct Concatenated {
  dsp::Waveform audio;
  std::vector<seg::CallSegment> calls;
};

/// The first half of a's calls (audio up to the end of call |a|/2) followed
/// by b's audio from the end of call |b|/2. Both need an even call count
/// >= 2, and a must differ from b.
Concatenated make_concat(const seg::SegmentWindow& a, const dsp::Waveform& audio_a,
                         const seg::SegmentWindow& b, const dsp::Waveform& audio_b);
UnitWindow concat_units(const UnitWindow& a, const UnitWindow& b);

dsp::Waveform make_reversal(const dsp::Waveform& audio);
/// Unit-domain shortcut: reverses the token order directly.
units::UnitSequence reverse_units(const units::UnitSequence& u);

struct PheeRecord {
  std::string caller_id;
  std::string receiver_id;  // the animal that responds
  std::string call_ref;
  std::string response_ref;
  double gap_s = 0.0;
  void validate() const;
};

void to_json(nlohmann::json& j, const PheeRecord& r);
void from_json(const nlohmann::json& j, PheeRecord& r);
void write_records(const std::filesystem::path& path, const std::vector<PheeRecord>& records);
std::vector<PheeRecord> read_records(const std::filesystem::path& path);

struct Skip {
  std::size_t record = 0;
  std::string reason;
};

struct PheeResult {
  std::vector<BenchmarkPair> pairs;
  std::vector<Skip> skipped;
};

/// caller_change swaps in a response by a different responder;
/// receiver_change swaps in a response by the same responder that was
/// addressed to a different caller. Each eligible record yields `augment`
/// pairs drawn from a seeded shuffle of its candidates (cycling when there
/// are fewer candidates than `augment`). Refs are "call_ref+response_ref".
PheeResult make_phee_pairs(const std::vector<PheeRecord>& records, Task mode, std::uint64_t seed,
                           int augment = 1);

/// Fills positive/distractor units of phee pairs from per-call units.
void attach_phee_units(std::vector<BenchmarkPair>& pairs,
                       const std::map<std::string, units::UnitSequence>& call_units);

struct TaskScore {
  int correct = 0;
  int total = 0;
  double accuracy() const { return total > 0 ? static_cast<double>(correct) / total : 0.0; }
};

struct EvalResult {
  std::map<std::string, TaskScore> per_task;
  TaskScore overall;
};

/// A pair counts as correct when score(positive) > score(distractor); ties
/// count as incorrect.
EvalResult pairwise_eval(const ulm::SequenceScorer& model, const std::vector<BenchmarkPair>& pairs,
                         const ulm::ContextPolicy& cp = {});

/// Positive and distractor exchanged.
std::vector<BenchmarkPair> swapped(std::vector<BenchmarkPair> pairs);

}  // namespace gmslm::bench

#endif  // GMSLM_BENCH_HPP_
