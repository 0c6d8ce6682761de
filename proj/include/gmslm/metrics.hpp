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


#ifndef GMSLM_METRICS_HPP_
#define GMSLM_METRICS_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "gmslm/common.hpp"
#include "gmslm/dsp.hpp"
#include "gmslm/units.hpp"

namespace gmslm::metrics {

struct GaussianStats {
  Vector mean;
  Matrix covariance;  // population convention (divides by n)
  int n = 0;
  int dims() const { return static_cast<int>(mean.size()); }
};

/// Rows of `embeddings` are samples.
GaussianStats fit_gaussian(const Matrix& embeddings);
GaussianStats fit_gaussian(const std::vector<dsp::PooledEmbedding>& embeddings);

/// Symmetric PSD square root by eigendecomposition, negative eigenvalues
/// clipped to zero.
Matrix psd_sqrt(const Matrix& a);

/// Frechet distance between two Gaussians:
/// |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}).
/// The cross term is evaluated as tr((S_a^{1/2} S_b S_a^{1/2})^{1/2}).
double fad(const GaussianStats& a, const GaussianStats& b);

/// The clip embedding used for FAD: pooled mean and variance of the 5-8 kHz
/// linear filterbank with its rising spectral flux appended (52 dims).
dsp::PooledEmbedding fad_embedding(const dsp::Waveform& w);

/// units x labels count table.
struct Contingency {
  Matrix counts;

  static Contingency zeros(int units, int labels);
  void add(int unit, int label, double count = 1.0);
  double total() const { return counts.sum(); }
};

struct Purity {
  double unit = 0.0;   // share of mass on each unit's majority label
  double label = 0.0;  // share of mass on each label's majority unit
};

Purity purity(const Contingency& c);

/// One count per frame; frames with a negative label are ignored.
Contingency frame_contingency(const units::UnitSequence& frame_units,
                              const std::vector<int>& frame_labels, int k, int labels);

/// One count per call: each call contributes its majority unit (lowest unit
/// id on ties) against the call's label.
Contingency call_contingency(const std::vector<units::UnitSequence>& call_units,
                             const std::vector<int>& call_labels, int k, int labels);

int majority_unit(const units::UnitSequence& u, int k);

/// {metric, value, n, config_fingerprint}.
nlohmann::json metric_json(const std::string& metric, double value, int n,
                           const std::string& fingerprint);

}  // namespace gmslm::metrics

#endif  // GMSLM_METRICS_HPP_
