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


#include <gtest/gtest.h>

#include <limits>

#include "gmslm/quantizer.hpp"
#include "oracles.hpp"

namespace gmslm::quant {
namespace {

using testing::brute_inertia;
using testing::lloyd;

Matrix random_points(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
  return x;
}

TEST(FitCodebook, TwoSeparatedClusters) {
  Rng rng(1);
  Matrix x(200, 2);
  for (int i = 0; i < 200; ++i) {
    const double cx = i < 100 ? 0.0 : 100.0;
    x(i, 0) = cx + rng.normal() * 0.1;
    x(i, 1) = rng.normal() * 0.1;
  }
  KMeansOptions o;
  o.k = 2;
  o.restarts = 3;
  o.minibatch = 64;
  const auto cb = fit_codebook(x, o);
  const Vector m0 = x.topRows(100).colwise().mean(), m1 = x.bottomRows(100).colwise().mean();
  const int first = cb.centroids(0, 0) < 50.0 ? 0 : 1;
  EXPECT_LT((cb.centroids.row(first).transpose() - m0).norm(), 1e-6);
  EXPECT_LT((cb.centroids.row(1 - first).transpose() - m1).norm(), 1e-6);
}

TEST(FitCodebook, DistinctPointsGiveZeroInertia) {
  const Matrix x = random_points(6, 3, 2);
  KMeansOptions o;
  o.k = 6;
  o.restarts = 2;
  EXPECT_NEAR(inertia(x, fit_codebook(x, o).centroids), 0.0, 1e-18);
}

TEST(FitCodebook, CloseToLloydOracle) {
  const Matrix x = random_points(500, 2, 3);
  KMeansOptions o;
  o.k = 8;
  o.restarts = 1;
  o.minibatch = 100;
  o.seed = 5;
  FitTrace trace;
  const auto cb = fit_codebook(x, o, &trace);
  std::vector<double> steps;
  const Matrix oracle = lloyd(x, trace.restarts[0].init, 100, &steps);
  for (std::size_t i = 1; i < steps.size(); ++i) EXPECT_LE(steps[i], steps[i - 1] + 1e-12);
  EXPECT_LE(inertia(x, cb.centroids), 1.05 * brute_inertia(x, oracle));
}

TEST(FitCodebook, NeverWorseThanAnyInitialization) {
  const Matrix x = random_points(300, 3, 4);
  KMeansOptions o;
  o.k = 5;
  o.restarts = 4;
  o.minibatch = 50;
  FitTrace trace;
  const double final_inertia = inertia(x, fit_codebook(x, o, &trace).centroids);
  ASSERT_EQ(trace.restarts.size(), 4u);
  for (const auto& r : trace.restarts) {
    EXPECT_LE(r.final_inertia, r.init_inertia);
    EXPECT_LE(final_inertia, r.init_inertia);
  }
}

TEST(FitCodebook, DeterministicPerSeedAndRejectsTooFewFrames) {
  const Matrix x = random_points(200, 2, 5);
  KMeansOptions o;
  o.k = 4;
  o.restarts = 2;
  o.minibatch = 32;
  EXPECT_TRUE(fit_codebook(x, o).centroids == fit_codebook(x, o).centroids);
  o.k = 300;
  try {
    fit_codebook(x, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::insufficient_data);
  }
}

TEST(Inertia, ExamplesAndBruteForce) {
  Codebook cb;
  cb.centroids = Matrix{{0.0, 0.0}, {10.0, 0.0}};
  dsp::FeatureMatrix f;
  f.rows = Matrix{{0.0, 0.0}, {10.0, 0.0}};
  EXPECT_EQ(inertia(f, cb), 0.0);
  f.rows = Matrix{{0.0, 3.0}};
  EXPECT_EQ(inertia(f, cb), 9.0);
  const Matrix x = random_points(100, 4, 6), c = random_points(7, 4, 7);
  EXPECT_NEAR(inertia(x, c), brute_inertia(x, c), 1e-9 * brute_inertia(x, c));
  f.rows = Matrix{{1.0, 2.0, 3.0}};
  EXPECT_THROW(inertia(f, cb), Error);
}

TEST(Encode, NearestWithLowestIndexTies) {
  Codebook cb;
  cb.centroids = Matrix{{0.0}, {10.0}, {-10.0}, {30.0}, {40.0}, {10.0}, {60.0}, {70.0}};
  dsp::FeatureMatrix f;
  f.rows = Matrix{{70.0}, {-5.0}, {10.0}};
  EXPECT_EQ(encode(f, cb), (units::UnitSequence{7, 0, 1}));
  f.rows = Matrix::Zero(100, 1);
  EXPECT_EQ(encode(f, cb).size(), 100u);
  f.rows = Matrix::Zero(3, 2);
  EXPECT_THROW(encode(f, cb), Error);
}

TEST(Codebook, JsonAndReconstruct) {
  Codebook cb;
  cb.centroids = Matrix{{1.0, 2.0}, {3.0, 4.0}};
  cb.feature_kind = dsp::FeatureKind::linear_fb;
  cb.fingerprint = "ff";
  const Codebook back = nlohmann::json(cb).get<Codebook>();
  EXPECT_TRUE(back.centroids == cb.centroids);
  EXPECT_EQ(back.fingerprint, "ff");
  const auto r = reconstruct({1, 0, 1}, cb);
  EXPECT_EQ(r.frames(), 3);
  EXPECT_EQ(r.rows(0, 1), 4.0);
  EXPECT_EQ(r.kind, dsp::FeatureKind::linear_fb);
}

}  // namespace
}  // namespace gmslm::quant
