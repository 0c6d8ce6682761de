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


// Run configuration for the end-to-end pipeline. A config file is a JSON
// document merged over the defaults below; unknown keys are rejected. The
// fingerprint is the FNV-1a hash of the canonical (key-sorted) merged form.

#ifndef GMSLM_CONFIG_HPP_
#define GMSLM_CONFIG_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmslm/attn.hpp"
#include "gmslm/dsp.hpp"
#include "gmslm/lm.hpp"
#include "gmslm/ngram.hpp"
#include "gmslm/probe.hpp"
#include "gmslm/quantizer.hpp"
#include "gmslm/segmenter.hpp"

namespace gmslm::pipeline {

/// Synthetic dialogue corpus: each scene is an exchange between two animals
/// taking turns; call types follow a sticky cycle.
struct SynthCorpusConfig {
  int scenes = 80;
  int animals = 4;
  int call_types = 3;  // 1..4
  int calls_min = 4;
  int calls_max = 8;
  double gap_min_s = 0.4;
  double gap_max_s = 2.5;
  double type_cycle_prob = 0.8;  // chance the next call takes the next type
  double noise_floor_db = -50.0;
};

struct CorpusConfig {
  /// External JSONL manifest; empty means generate the synthetic corpus.
  std::string manifest;
  std::array<double, 3> splits{0.8, 0.1, 0.1};
  std::string eval_split = "test";
  SynthCorpusConfig synth;
};

struct QuantizerConfig {
  quant::KMeansOptions kmeans{16, 2000, 3, 0, 30, 1e-4};
  int max_frames = 20000;  // training frames subsampled to at most this
  bool dedup = false;
};

struct AttnSection {
  bool enabled = false;
  ulm::AttnConfig model;
  ulm::TrainOptions train;
};

struct BenchConfig {
  int phee_augment = 2;
};

struct ContextGrid {
  std::vector<int> windows{500, 400, 300, 200, 50};
  std::vector<int> keep_first{0, 1, 5};
  /// Unlimited first, then every window x keep_first.
  std::vector<ulm::ContextPolicy> policies() const;
};

struct RunConfig {
  std::uint64_t seed = 1;
  CorpusConfig corpus;
  seg::DetectorParams detector;
  dsp::FeatureKind features = dsp::FeatureKind::linear_fb;
  QuantizerConfig quantizer;
  ulm::NGramOptions ngram;
  AttnSection attn;
  BenchConfig bench;
  ContextGrid context_grid;
  ulm::ProbeOptions probe;

  void validate() const;
  nlohmann::json to_json() const;
  std::string fingerprint() const;
};

/// Defaults merged with `overrides`; throws invalid-argument on unknown keys
/// or invalid values.
RunConfig config_from_json(const nlohmann::json& overrides);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace gmslm::pipeline

#endif  // GMSLM_CONFIG_HPP_
