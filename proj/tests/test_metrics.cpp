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

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "gmslm/metrics.hpp"

namespace gmslm::metrics {
namespace {

GaussianStats sampled(int n, const Matrix& mix, const Vector& shift, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, mix.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  x = x * mix.transpose();
  x.rowwise() += shift.transpose();
  return fit_gaussian(x);
}

// Closed form in long double: the trace term via the eigenvalues of
// S_a S_b, which are real and non-negative for PSD inputs.
double fad_oracle(const GaussianStats& a, const GaussianStats& b) {
  using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const LMat sa = a.covariance.cast<long double>(), sb = b.covariance.cast<long double>();
  Eigen::EigenSolver<LMat> es(sa * sb);
  long double cross = 0.0L;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    cross += std::sqrt(std::max(0.0L, es.eigenvalues()[i].real()));
  const long double d = (a.mean - b.mean).cast<long double>().squaredNorm();
  return static_cast<double>(d + sa.trace() + sb.trace() - 2.0L * cross);
}

TEST(FitGaussian, Examples) {
  const auto g = fit_gaussian(Matrix{{0.0}, {2.0}});
  EXPECT_EQ(g.mean[0], 1.0);
  EXPECT_EQ(g.covariance(0, 0), 1.0);
  const auto same = fit_gaussian(Matrix{{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}});
  EXPECT_EQ(same.covariance.cwiseAbs().maxCoeff(), 0.0);
  try {
    fit_gaussian(Matrix{{1.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::insufficient_data);
  }
}

TEST(FitGaussian, MatchesTwoPassOracle) {
  Rng rng(1);
  Matrix x(500, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal() * 2.0 + 5.0;
  const auto g = fit_gaussian(x);
  for (int a = 0; a < 4; ++a) {
    double m = 0.0;
    for (int i = 0; i < 500; ++i) m += x(i, a);
    m /= 500.0;
    EXPECT_NEAR(g.mean[a], m, 1e-10);
    for (int b = 0; b < 4; ++b) {
      double mb = 0.0;
      for (int i = 0; i < 500; ++i) mb += x(i, b);
      mb /= 500.0;
      double c = 0.0;
      for (int i = 0; i < 500; ++i) c += (x(i, a) - m) * (x(i, b) - mb);
      EXPECT_NEAR(g.covariance(a, b), c / 500.0, 1e-10);
    }
  }
  EXPECT_LT((g.covariance - g.covariance.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  Eigen::SelfAdjointEigenSolver<Matrix> es(g.covariance);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
}

TEST(Fad, Identities) {
  Matrix mix(3, 3);
  mix << 2.0, 0.1, 0.0, 0.3, 1.0, 0.0, 0.0, 0.5, 0.2;
  const auto a = sampled(400, mix, Vector::Zero(3), 2);
  EXPECT_NEAR(fad(a, a), 0.0, 1e-9);
  GaussianStats p{Vector::Zero(4), Matrix::Identity(4, 4), 10};
  GaussianStats q{Vector::Zero(4), Matrix::Identity(4, 4), 10};
  q.mean << 1.0, -2.0, 0.5, 3.0;
  EXPECT_NEAR(fad(p, q), q.mean.squaredNorm(), 1e-9);
}

TEST(Fad, MatchesExtendedPrecisionOracleAndIsSymmetric) {
  Matrix ma(3, 3), mb(3, 3);
  ma << 3.0, 0.2, 0.0, 0.0, 1.0, 0.4, 0.1, 0.0, 0.3;
  mb << 1.0, 0.0, 0.5, 0.7, 2.0, 0.0, 0.0, 0.1, 1.5;
  const auto a = sampled(300, ma, Vector::Constant(3, 0.5), 3);
  const auto b = sampled(300, mb, Vector::Zero(3), 4);
  const double v = fad(a, b);
  EXPECT_NEAR(v, fad_oracle(a, b), 1e-6 * std::abs(fad_oracle(a, b)));
  EXPECT_NEAR(v, fad(b, a), 1e-9);
  EXPECT_GE(v, 0.0);
}

TEST(Fad, RankDeficientInputsStayFinite) {
  const auto a = fit_gaussian(Matrix{{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}});
  const auto b = fit_gaussian(Matrix{{0.0, 1.0}, {1.0, 0.0}, {2.0, 1.0}});
  EXPECT_TRUE(std::isfinite(fad(a, b)));
  EXPECT_GE(fad(a, b), 0.0);
  EXPECT_THROW(fad(a, fit_gaussian(Matrix{{0.0}, {1.0}})), Error);
}

TEST(PsdSqrt, SquaresBack) {
  Matrix m(2, 2);
  m << 4.0, 1.0, 1.0, 3.0;
  const Matrix r = psd_sqrt(m);
  EXPECT_LT((r * r - m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Purity, Examples) {
  auto c = Contingency::zeros(3, 3);
  for (int i = 0; i < 3; ++i) c.add(i, i, 5.0);
  const auto p = purity(c);
  EXPECT_EQ(p.unit, 1.0);
  EXPECT_EQ(p.label, 1.0);
  auto half = Contingency::zeros(1, 2);
  half.add(0, 0, 4.0);
  half.add(0, 1, 4.0);
  EXPECT_EQ(purity(half).unit, 0.5);
  EXPECT_EQ(purity(half).label, 1.0);
  EXPECT_THROW(purity(Contingency::zeros(2, 2)), Error);
}

TEST(Purity, RandomAssignmentMatchesMonteCarlo) {
  const int units = 50, labels = 5, frames = 100000;
  Rng rng(5);
  auto c = Contingency::zeros(units, labels);
  for (int i = 0; i < frames; ++i)
    c.add(static_cast<int>(rng.below(units)), static_cast<int>(rng.below(labels)));
  // Expected unit purity: each unit holds Multinomial(n_u, 1/5) counts; the
  // expectation of the maximum is estimated by simulation.
  Rng mc(6);
  const int draws = 20;
  double expected = 0.0;
  for (int d = 0; d < draws; ++d) {
    auto sim = Contingency::zeros(units, labels);
    for (int i = 0; i < frames; ++i)
      sim.add(static_cast<int>(mc.below(units)), static_cast<int>(mc.below(labels)));
    expected += sim.counts.rowwise().maxCoeff().sum() / frames;
  }
  expected /= draws;
  EXPECT_NEAR(purity(c).unit, expected, 0.01);
}

TEST(Purity, RefinementNeverLowersUnitPurity) {
  Rng rng(7);
  auto coarse = Contingency::zeros(4, 3), fine = Contingency::zeros(8, 3);
  for (int i = 0; i < 2000; ++i) {
    const int u = static_cast<int>(rng.below(8)), l = static_cast<int>(rng.below(3));
    fine.add(u, l);
    coarse.add(u / 2, l);
  }
  EXPECT_GE(purity(fine).unit, purity(coarse).unit);
}

TEST(Purity, FrameAndCallLevels) {
  const units::UnitSequence frames{0, 0, 1, 2, 2, 2};
  const std::vector<int> labels{0, 0, 1, 1, -1, 1};
  const auto f = frame_contingency(frames, labels, 3, 2);
  EXPECT_EQ(f.total(), 5.0);
  const auto pf = purity(f);
  EXPECT_GT(pf.unit, 0.0);
  EXPECT_LE(pf.unit, 1.0);
  EXPECT_EQ(majority_unit({2, 1, 1, 2}, 3), 1);
  const auto c = call_contingency({{0, 0, 1}, {2, 2}, {1, 1, 0}}, {0, 1, 1}, 3, 2);
  EXPECT_EQ(c.total(), 3.0);
  const auto pc = purity(c);
  EXPECT_GT(pc.unit, 0.0);
  EXPECT_LE(pc.label, 1.0);
  const auto j = metric_json("unit_purity", pc.unit, 3, "abc");
  EXPECT_EQ(j.at("metric"), "unit_purity");
  EXPECT_EQ(j.at("config_fingerprint"), "abc");
}

TEST(FadEmbedding, HasFiftyTwoDimensions) {
  dsp::Waveform w;
  Rng rng(8);
  for (int i = 0; i < 16000; ++i) w.samples.push_back(0.1 * rng.normal());
  EXPECT_EQ(fad_embedding(w).size(), 52);
}

}  // namespace
}  // namespace gmslm::metrics
