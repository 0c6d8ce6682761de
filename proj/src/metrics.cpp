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


#include "gmslm/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace gmslm::metrics {

GaussianStats fit_gaussian(const Matrix& embeddings) {
  require(embeddings.rows() >= 2, Errc::insufficient_data,
          "a Gaussian fit needs at least two embeddings, got " +
              std::to_string(embeddings.rows()));
  GaussianStats g;
  g.n = static_cast<int>(embeddings.rows());
  g.mean = embeddings.colwise().mean().transpose();
  const Matrix centered = embeddings.rowwise() - g.mean.transpose();
  g.covariance = (centered.transpose() * centered) / static_cast<double>(g.n);
  g.covariance = 0.5 * (g.covariance + g.covariance.transpose()).eval();
  return g;
}

GaussianStats fit_gaussian(const std::vector<dsp::PooledEmbedding>& embeddings) {
  require(embeddings.size() >= 2, Errc::insufficient_data,
          "a Gaussian fit needs at least two embeddings");
  Matrix m(static_cast<Eigen::Index>(embeddings.size()), embeddings.front().size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    require(embeddings[i].size() == m.cols(), Errc::invalid_argument,
            "embeddings have mixed dimensions");
    m.row(i) = embeddings[i].transpose();
  }
  return fit_gaussian(m);
}

Matrix psd_sqrt(const Matrix& a) {
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double fad(const GaussianStats& a, const GaussianStats& b) {
  require(a.dims() == b.dims() && a.covariance.rows() == a.dims() &&
              b.covariance.rows() == b.dims(),
          Errc::invalid_argument,
          "FAD dimension mismatch: " + std::to_string(a.dims()) + " vs " +
              std::to_string(b.dims()));
  const Matrix sa = psd_sqrt(a.covariance);
  const Eigen::MatrixXd inner = sa * b.covariance * sa;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (inner + inner.transpose()),
                                                    Eigen::EigenvaluesOnly);
  const double cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double value = mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
  return std::max(value, 0.0);
}

dsp::PooledEmbedding fad_embedding(const dsp::Waveform& w) {
  return dsp::pool_stats(dsp::with_rising_flux(dsp::linear_fb(w)));
}

Contingency Contingency::zeros(int units, int labels) {
  require(units >= 1 && labels >= 1, Errc::invalid_argument, "empty contingency shape");
  return Contingency{Matrix::Zero(units, labels)};
}

void Contingency::add(int unit, int label, double count) {
  require(unit >= 0 && unit < counts.rows() && label >= 0 && label < counts.cols(),
          Errc::invalid_argument, "contingency index out of range");
  require(count >= 0.0, Errc::invalid_argument, "counts must be non-negative");
  counts(unit, label) += count;
}

Purity purity(const Contingency& c) {
  require(c.counts.size() > 0 && (c.counts.array() >= 0.0).all(), Errc::invalid_argument,
          "contingency must be non-empty and non-negative");
  const double total = c.total();
  require(total > 0.0, Errc::invalid_argument, "contingency table is empty");
  return Purity{c.counts.rowwise().maxCoeff().sum() / total,
                c.counts.colwise().maxCoeff().sum() / total};
}

Contingency frame_contingency(const units::UnitSequence& frame_units,
                              const std::vector<int>& frame_labels, int k, int labels) {
  require(frame_units.size() == frame_labels.size(), Errc::invalid_argument,
          "one label per frame is required");
  Contingency c = Contingency::zeros(k, labels);
  for (std::size_t i = 0; i < frame_units.size(); ++i)
    if (frame_labels[i] >= 0) c.add(frame_units[i], frame_labels[i]);
  return c;
}

int majority_unit(const units::UnitSequence& u, int k) {
  require(!u.empty(), Errc::invalid_argument, "call has no frames");
  units::check_range(u, k);
  std::vector<int> hist(static_cast<std::size_t>(k), 0);
  for (int t : u) ++hist[t];
  return static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
}

Contingency call_contingency(const std::vector<units::UnitSequence>& call_units,
                             const std::vector<int>& call_labels, int k, int labels) {
  require(call_units.size() == call_labels.size(), Errc::invalid_argument,
          "one label per call is required");
  Contingency c = Contingency::zeros(k, labels);
  for (std::size_t i = 0; i < call_units.size(); ++i)
    if (call_labels[i] >= 0) c.add(majority_unit(call_units[i], k), call_labels[i]);
  return c;
}

nlohmann::json metric_json(const std::string& metric, double value, int n,
                           const std::string& fingerprint) {
  return {{"metric", metric}, {"value", value}, {"n", n}, {"config_fingerprint", fingerprint}};
}

}  // namespace gmslm::metrics
