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


#ifndef GMSLM_GENERATE_HPP_
#define GMSLM_GENERATE_HPP_

#include <cstdint>

#include "gmslm/lm.hpp"

namespace gmslm::ulm {

struct GenerateOptions {
  int beam = 5;
  double temperature = 1.5;
  /// Upper bound on the output length, prompt included.
  int max_len = 64;
  /// Argmax decoding with a single hypothesis; stands in for temperature 0.
  bool greedy = false;
  /// Perturb candidate scores with seeded Gumbel noise (stochastic beam).
  bool sample = false;
  std::uint64_t seed = 0;
  ContextPolicy context;
};

struct Generation {
  units::UnitSequence tokens;  // prompt followed by the continuation
  double log_prob = 0.0;       // tempered log-probability of the continuation
  bool ended = false;          // finished with EOS rather than at max_len
};

/// Temperature-scaled beam search. Each step extends every live hypothesis
/// by all K+1 outcomes, scored with log_softmax(log P / temperature); EOS or
/// reaching max_len finishes a hypothesis. Returns the best finished one.
Generation generate(const LanguageModel& model, const units::UnitSequence& prompt,
                    const GenerateOptions& opts);

}  // namespace gmslm::ulm

#endif  // GMSLM_GENERATE_HPP_
