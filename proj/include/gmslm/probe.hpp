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


#ifndef GMSLM_PROBE_HPP_
#define GMSLM_PROBE_HPP_

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "gmslm/common.hpp"

namespace gmslm::ulm {

struct ProbeOptions {
  std::vector<int> hidden{128, 64, 32};  // decreasing widths
  int epochs = 20;
  int batch = 32;
  double lr = 1e-3;
  double decay_power = 1.0;  // polynomial decay of the learning rate to zero
  double valid_fraction = 0.1;
  std::uint64_t seed = 0;
};

/// Feed-forward classifier: inputs are standardized with training-set
/// statistics, then each hidden layer is Linear -> LayerNorm -> ReLU, and a
/// final Linear layer produces C logits.
class ProbeClassifier {
 public:
  ProbeClassifier(int input_dim, int classes, const std::vector<int>& hidden, std::uint64_t seed);

  int input_dim() const { return static_cast<int>(mean_.size()); }
  int classes() const { return classes_; }

  /// N x C logits for N x D inputs.
  Matrix logits(const Matrix& x) const;
  std::vector<int> predict(const Matrix& x) const;

  nlohmann::json to_json() const;
  static ProbeClassifier from_json(const nlohmann::json& j);

 private:
  struct Layer {
    Matrix w, b, g, beta;
  };
  struct Grads;
  friend ProbeClassifier train_probe(const Matrix&, const std::vector<int>&, const ProbeOptions&,
                                     std::vector<double>*);

  int classes_;
  Vector mean_, scale_;
  std::vector<Layer> hidden_;
  Matrix out_w_, out_b_;
};

/// Trains on every row of `x`. Labels are 0..C-1 with at least two classes.
/// Adam with a polynomially decaying learning rate; optionally records the
/// mean loss per epoch.
ProbeClassifier train_probe(const Matrix& x, const std::vector<int>& labels,
                            const ProbeOptions& opts, std::vector<double>* epoch_loss = nullptr);

struct ProbeMetrics {
  double recall = 0.0;     // macro average
  double precision = 0.0;  // macro average
  double f1 = 0.0;         // macro average of per-class F1
  double accuracy = 0.0;
  int n = 0;
};

ProbeMetrics probe_eval(const ProbeClassifier& clf, const Matrix& x,
                        const std::vector<int>& labels);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
};

/// Class-balanced split: each class contributes round(fraction * n_c)
/// records (at least one when it has two or more) to the validation side.
Split balanced_split(const std::vector<int>& labels, double valid_fraction, std::uint64_t seed);

/// balanced_split, train on the training side, evaluate on the validation side.
ProbeMetrics probe_experiment(const Matrix& x, const std::vector<int>& labels,
                              const ProbeOptions& opts);

}  // namespace gmslm::ulm

#endif  // GMSLM_PROBE_HPP_
