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

// Vocalization-to-unit quantization: mini-batch k-means with k-means++
// restarts, nearest-centroid encoding.

#ifndef GMSLM_QUANTIZER_HPP_
#define GMSLM_QUANTIZER_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmslm/dsp.hpp"
#include "gmslm/units.hpp"

namespace gmslm::quant {

struct Codebook {
  Matrix centroids;  // K x D
  dsp::FeatureKind feature_kind = dsp::FeatureKind::mfcc;
  std::uint64_t seed = 0;
  int restarts = 0;
  int minibatch = 0;
  std::string fingerprint;  // run-config fingerprint, empty when standalone

  int k() const { return static_cast<int>(centroids.rows()); }
  int dims() const { return static_cast<int>(centroids.cols()); }
};

void to_json(nlohmann::json& j, const Codebook& cb);
void from_json(const nlohmann::json& j, Codebook& cb);
void save(const std::filesystem::path& path, const Codebook& cb);
Codebook load(const std::filesystem::path& path);

struct KMeansOptions {
  int k = 50;
  int minibatch = 10000;
  int restarts = 20;
  std::uint64_t seed = 0;
  int max_epochs = 100;
  double rel_tol = 1e-4;
};

struct RestartTrace {
  Matrix init;            // k-means++ seeds
  double init_inertia = 0.0;
  double final_inertia = 0.0;
  int epochs = 0;
};

struct FitTrace {
  std::vector<RestartTrace> restarts;
  int best = -1;
};

/// Stacks the frames of several feature matrices into one matrix.
Matrix stack_frames(std::span<const dsp::FeatureMatrix> features);

/// k-means++ seeding: first centre uniform, later centres drawn with
/// probability proportional to squared distance from the nearest centre.
Matrix kmeans_pp_init(const Matrix& data, int k, Rng& rng);

/// Mini-batch k-means from the given initialization. Each epoch is one pass
/// over a shuffled order in batches of `minibatch` frames with per-centre
/// learning rate 1/count. Stops when full-data inertia improves by less than
/// rel_tol over an epoch or after max_epochs. Empty clusters are reseeded to
/// the frame farthest from its centroid. Returns the lowest-inertia state
/// seen, including the initialization.
Matrix minibatch_kmeans(const Matrix& data, const Matrix& init, const KMeansOptions& opts,
                        Rng& rng, RestartTrace* trace = nullptr);

Codebook fit_codebook(const Matrix& data, const KMeansOptions& opts, FitTrace* trace = nullptr);
Codebook fit_codebook(std::span<const dsp::FeatureMatrix> features, const KMeansOptions& opts,
                      FitTrace* trace = nullptr);

/// Sum of squared distances from each row to its nearest centroid.
double inertia(const Matrix& data, const Matrix& centroids);
double inertia(const dsp::FeatureMatrix& f, const Codebook& cb);

/// Nearest centroid per row; ties go to the lowest index.
std::vector<int> assign(const Matrix& data, const Matrix& centroids);
units::UnitSequence encode(const dsp::FeatureMatrix& f, const Codebook& cb);

/// Each frame replaced by its centroid.
dsp::FeatureMatrix reconstruct(const units::UnitSequence& u, const Codebook& cb,
                               double frame_stride_ms = 20.0);

}  // namespace gmslm::quant

#endif  // GMSLM_QUANTIZER_HPP_
