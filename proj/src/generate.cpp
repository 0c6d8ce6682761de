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


#include "gmslm/generate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gmslm::ulm {

namespace {

struct Hyp {
  units::UnitSequence tokens;
  double score = 0.0;  // accumulated tempered log-probability
  double key = 0.0;    // ranking key (score, plus noise when sampling)
  bool eos = false;
};

std::vector<double> tempered(std::vector<double> lp, double temperature) {
  for (double& v : lp) v /= temperature;
  const double lse = log_sum_exp(lp);
  for (double& v : lp) v -= lse;
  return lp;
}

double gumbel(Rng& rng) {
  double u = rng.uniform();
  while (u <= 0.0) u = rng.uniform();
  return -std::log(-std::log(u));
}

}  // namespace

Generation generate(const LanguageModel& model, const units::UnitSequence& prompt,
                    const GenerateOptions& opts) {
  const int k = model.vocab_size();
  require(k >= 1, Errc::invalid_argument, "model has an empty vocabulary");
  require(opts.beam >= 1, Errc::invalid_argument, "beam must be >= 1");
  require(opts.greedy || opts.temperature > 0.0, Errc::invalid_argument,
          "temperature must be positive (use greedy mode for the zero limit)");
  units::check_range(prompt, k);
  require(opts.max_len >= static_cast<int>(prompt.size()), Errc::invalid_argument,
          "max_len is shorter than the prompt");
  opts.context.validate();

  const int width = opts.greedy ? 1 : opts.beam;
  const double temp = opts.greedy ? 1.0 : opts.temperature;
  Rng rng = Rng::derive(opts.seed, "ulm.generate");

  std::vector<Hyp> live{Hyp{prompt, 0.0, 0.0, false}};
  std::vector<Generation> done;
  if (static_cast<int>(prompt.size()) == opts.max_len) {
    done.push_back({prompt, 0.0, false});
    live.clear();
  }

  while (!live.empty()) {
    std::vector<Hyp> cand;
    for (const Hyp& h : live) {
      const auto lp = tempered(model.next_log_probs(h.tokens, opts.context), temp);
      for (int w = 0; w <= k; ++w) {
        Hyp c{h.tokens, h.score + lp[w], 0.0, w == k};
        c.key = c.score + (opts.sample ? gumbel(rng) : 0.0);
        if (!c.eos) c.tokens.push_back(w);
        cand.push_back(std::move(c));
      }
    }
    std::stable_sort(cand.begin(), cand.end(),
                     [](const Hyp& a, const Hyp& b) { return a.key > b.key; });
    if (static_cast<int>(cand.size()) > width) cand.resize(static_cast<std::size_t>(width));
    live.clear();
    for (Hyp& c : cand) {
      if (c.eos || static_cast<int>(c.tokens.size()) >= opts.max_len)
        done.push_back({std::move(c.tokens), c.score, c.eos});
      else
        live.push_back(std::move(c));
    }
    // Scores only decrease, so stop once no live hypothesis beats the best
    // finished one.
    if (!done.empty()) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& g : done) best = std::max(best, g.log_prob);
      std::erase_if(live, [best](const Hyp& h) { return h.score <= best; });
    }
  }
  auto best = std::max_element(done.begin(), done.end(), [](const auto& a, const auto& b) {
    return a.log_prob < b.log_prob;
  });
  return *best;
}

}  // namespace gmslm::ulm
