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


// Independent reference implementations shared by the unit tests and the
// acceptance suite.

#ifndef GMSLM_TESTS_ORACLES_HPP_
#define GMSLM_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "gmslm/attn.hpp"
#include "gmslm/common.hpp"
#include "gmslm/units.hpp"

namespace gmslm::testing {

inline double brute_inertia(const Matrix& x, const Matrix& c) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < c.rows(); ++j) {
      double d = 0.0;
      for (Eigen::Index k = 0; k < x.cols(); ++k) d += (x(i, k) - c(j, k)) * (x(i, k) - c(j, k));
      best = std::min(best, d);
    }
    total += best;
  }
  return total;
}

// Full-batch Lloyd iterations; records the inertia after each assignment.
inline Matrix lloyd(const Matrix& x, Matrix c, int iters, std::vector<double>* trace) {
  for (int it = 0; it < iters; ++it) {
    Matrix sum = Matrix::Zero(c.rows(), c.cols());
    Vector n = Vector::Zero(c.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      Eigen::Index best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < c.rows(); ++j) {
        const double d = (x.row(i) - c.row(j)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = j;
        }
      }
      sum.row(best) += x.row(i);
      n[best] += 1;
    }
    for (Eigen::Index j = 0; j < c.rows(); ++j)
      if (n[j] > 0) c.row(j) = sum.row(j) / n[j];
    if (trace) trace->push_back(brute_inertia(x, c));
  }
  return c;
}

// Interpolated Kneser-Ney written directly from the counting definitions.
class KneserNeyOracle {
 public:
  KneserNeyOracle(const std::vector<units::UnitSequence>& corpus, int k, int n, double d)
      : k_(k), n_(n), d_(d) {
    for (const auto& s : corpus) {
      std::vector<int> x(static_cast<std::size_t>(n - 1), k + 1);
      x.insert(x.end(), s.begin(), s.end());
      x.push_back(k);
      for (std::size_t i = static_cast<std::size_t>(n - 1); i < x.size(); ++i)
        for (int m = 1; m <= n; ++m) raw_[std::vector<int>(x.begin() + (i + 1 - m), x.begin() + i + 1)] += 1;
    }
    for (const auto& [gram, c] : raw_)
      if (gram.size() >= 2 && c > 0) cont_[std::vector<int>(gram.begin() + 1, gram.end())] += 1;
  }

  double prob(std::vector<int> ctx, int w) const {
    if (static_cast<int>(ctx.size()) > n_ - 1) ctx.erase(ctx.begin(), ctx.end() - (n_ - 1));
    return level(ctx, w, true);
  }

 private:
  double table(const std::vector<int>& gram, bool top) const {
    const auto& t = top ? raw_ : cont_;
    auto it = t.find(gram);
    return it == t.end() ? 0.0 : it->second;
  }

  double level(const std::vector<int>& ctx, int w, bool top) const {
    const double v = k_ + 1;
    double denom = 0.0, types = 0.0;
    for (int x = 0; x <= k_; ++x) {
      auto g = ctx;
      g.push_back(x);
      const double c = table(g, top);
      denom += c;
      types += c > 0.0;
    }
    const std::vector<int> shorter(ctx.empty() ? ctx.begin() : ctx.begin() + 1, ctx.end());
    if (denom == 0.0) return ctx.empty() ? 1.0 / v : level(shorter, w, false);
    auto g = ctx;
    g.push_back(w);
    const double lower = ctx.empty() ? 1.0 / v : level(shorter, w, false);
    return std::max(table(g, top) - d_, 0.0) / denom + d_ * types / denom * lower;
  }

  int k_, n_;
  double d_;
  std::map<std::vector<int>, double> raw_, cont_;
};

// Largest |analytic - numeric| over a tensor, relative to the largest
// gradient magnitude in that tensor.
inline double tensor_relative_error(ulm::AttnLM& m, std::size_t index, const units::UnitSequence& seq,
                             const ulm::ContextPolicy& cp) {
  const double h = 1e-5;
  ulm::Tensor& t = m.tensors()[index];
  double worst = 0.0, scale = 0.0;
  for (Eigen::Index i = 0; i < t.value.size(); ++i) {
    const double saved = t.value.data()[i];
    t.value.data()[i] = saved + h;
    const double up = m.loss(seq, cp, false);
    t.value.data()[i] = saved - h;
    const double down = m.loss(seq, cp, false);
    t.value.data()[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = t.grad.data()[i];
    worst = std::max(worst, std::abs(numeric - analytic));
    scale = std::max({scale, std::abs(numeric), std::abs(analytic)});
  }
  return scale > 0.0 ? worst / scale : worst;
}

}  // namespace gmslm::testing

#endif  // GMSLM_TESTS_ORACLES_HPP_
