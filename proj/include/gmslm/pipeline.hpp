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


// End-to-end pipeline: synth -> segment -> features -> quantize -> ulm ->
// bench -> eval. Every stage reads its inputs from and writes its outputs to
// the run directory, so a rerun resumes after the last completed stage.
//
// Run directory layout:
//   config.json                 canonical merged config
//   corpus/manifest.jsonl       records with splits (plus synthetic audio)
//   segments/windows.json       packed windows of detected calls
//   features/{windows,calls}/   per-window and per-call feature CSVs
//   models/                     codebook, n-gram and attention models
//   units/{windows,calls}.txt   encoded unit sequences
//   bench/pairs.jsonl           benchmark pairs with units
//   stages/<stage>.json         completion markers carrying the fingerprint
//   report.json

#ifndef GMSLM_PIPELINE_HPP_
#define GMSLM_PIPELINE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmslm/config.hpp"
#include "gmslm/dsp.hpp"

namespace gmslm::pipeline {

inline constexpr const char* kToolName = "gmslm";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr std::array<const char*, 7> kStages{"synth",    "segment", "features", "quantize",
                                                    "ulm",      "bench",   "eval"};
inline constexpr std::array<const char*, 5> kTasks{"shuffle", "concat", "reversal",
                                                   "caller_change", "receiver_change"};

struct SynthCall {
  double onset_s = 0.0;
  double offset_s = 0.0;
  int animal = 0;
  int type = 0;
};

struct SynthScene {
  std::string name;
  dsp::Waveform audio;
  std::vector<SynthCall> calls;
  int caller = 0;    // first animal to call
  int receiver = 0;  // the animal answering it
};

std::string animal_name(int animal);

/// Turn-taking exchanges between two animals per scene. Animals differ in
/// base frequency; call types differ in duration, sweep and FM.
std::vector<SynthScene> make_synthetic_corpus(const SynthCorpusConfig& cfg, std::uint64_t seed);

dsp::FeatureMatrix featurize(const dsp::Waveform& w, dsp::FeatureKind kind);

struct RunOptions {
  std::filesystem::path out_dir;
  int jobs = 1;
};

/// Thrown when a stage fails; the partial report has already been written.
class StageFailure : public std::runtime_error {
 public:
  StageFailure(const std::string& stage, const std::string& what)
      : std::runtime_error("stage " + stage + " failed: " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Runs (or resumes) every stage and returns the report. A run directory
/// holding artifacts of another config is rejected with fingerprint-mismatch.
nlohmann::json pipeline_run(const RunConfig& cfg, const RunOptions& opts);

/// Runs a single stage; earlier stages must already be complete.
void run_stage(const std::string& stage, const RunConfig& cfg, const RunOptions& opts);

/// Throws format-error when a report lacks a required field.
void validate_report(const nlohmann::json& report);

/// Human-readable summary of a report.
std::string render_report(const nlohmann::json& report);

/// Calls fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace gmslm::pipeline

#endif  // GMSLM_PIPELINE_HPP_
