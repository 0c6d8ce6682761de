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

// Synthetic oracles: phee-like call scenes with exact boundaries, and Markov
// unit corpora with known transition probabilities.

#ifndef GMSLM_SYNTHLAB_HPP_
#define GMSLM_SYNTHLAB_HPP_

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gmslm/dsp.hpp"
#include "gmslm/segmenter.hpp"
#include "gmslm/units.hpp"

namespace gmslm::synth {

/// A frequency-modulated tone with raised-cosine attack and decay ramps.
struct CallSpec {
  double f0_hz = 7000.0;
  double duration_s = 1.0;
  double fm_depth_hz = 100.0;
  double fm_rate_hz = 1.0;
  double amplitude = 0.5;
  double attack_s = 0.01;
  double decay_s = 0.01;
  /// Linear frequency drift across the call, added to the FM trajectory.
  double sweep_hz = 0.0;

  void validate() const;
};

struct PlacedCall {
  double onset_s = 0.0;
  CallSpec call;
};

struct SceneSpec {
  double total_s = 10.0;
  std::vector<PlacedCall> calls;
  double noise_floor_db = -60.0;  // white-noise RMS relative to full scale
  double sample_rate = dsp::kDefaultSampleRate;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Scene {
  dsp::Waveform audio;
  std::vector<seg::CallSegment> truth;
};

/// Renders one call (no noise) at the given rate.
std::vector<double> render_call(const CallSpec& c, double sample_rate);

Scene synth_scene(const SceneSpec& s);

void to_json(nlohmann::json& j, const CallSpec& c);
void from_json(const nlohmann::json& j, CallSpec& c);
void to_json(nlohmann::json& j, const SceneSpec& s);
void from_json(const nlohmann::json& j, SceneSpec& s);

// ---------------------------------------------------------------------------

struct MarkovChain {
  Vector pi;  // initial distribution
  Matrix P;   // row-stochastic transitions

  int states() const { return static_cast<int>(pi.size()); }
  /// Non-negative entries, rows and pi summing to 1 within 1e-12.
  void validate() const;

  static MarkovChain uniform(int k);
  static MarkovChain identity(int k, int start_state);
};

void to_json(nlohmann::json& j, const MarkovChain& c);
void from_json(const nlohmann::json& j, MarkovChain& c);

std::vector<units::UnitSequence> markov_corpus(const MarkovChain& c, int n_seqs, int len,
                                               std::uint64_t seed);

/// Stationary distribution reached from pi, via power iteration on the lazy
/// chain (I + P) / 2. Throws no-stationary-distribution if it does not settle.
Vector stationary_distribution(const MarkovChain& c);

/// exp(entropy rate) of the chain.
double chain_ppl(const MarkovChain& c);

/// Order-sensitive chain over a random cyclic order of the states: each state
/// prefers the next `successors` states of the cycle, which share 1 - leak of
/// the mass; the rest is spread uniformly. The chain is doubly stochastic.
MarkovChain sparse_cycle_chain(int k, int successors, double leak, std::uint64_t seed);

// ---------------------------------------------------------------------------

/// A chain over K states whose next-state distribution depends on the
/// previous `order` states.
struct ContextChain {
  int k = 0;
  int order = 1;
  /// Row index is the base-K encoding of the context (oldest state most
  /// significant); each row is a distribution over the next state.
  Matrix table;

  std::size_t context_index(std::span<const int> history) const;
};

/// Random context chain whose rows put 1 - leak on `successors` next states
/// chosen per full context, so the prediction needs the whole history.
ContextChain random_context_chain(int k, int order, int successors, double leak,
                                  std::uint64_t seed);

/// Sequences whose first `order` states are uniform and the rest follow the
/// chain.
std::vector<units::UnitSequence> context_corpus(const ContextChain& c, int n_seqs, int len,
                                                std::uint64_t seed);

}  // namespace gmslm::synth

#endif  // GMSLM_SYNTHLAB_HPP_
