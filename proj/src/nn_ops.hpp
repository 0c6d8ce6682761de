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


// Dense-layer building blocks shared by the attention model and the probe.

#ifndef GMSLM_SRC_NN_OPS_HPP_
#define GMSLM_SRC_NN_OPS_HPP_

#include <cmath>
#include <vector>

#include "gmslm/common.hpp"

namespace gmslm::nn {

inline constexpr double kLnEps = 1e-5;

struct LnCache {
  Matrix xhat;
  Vector rstd;
};

/// Row-wise LayerNorm with gain and bias stored as 1 x D matrices.
inline Matrix layer_norm(const Matrix& x, const Matrix& g, const Matrix& b, LnCache& c) {
  const Eigen::Index t = x.rows(), e = x.cols();
  c.xhat.resize(t, e);
  c.rstd.resize(t);
  Matrix y(t, e);
  for (Eigen::Index i = 0; i < t; ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().mean();
    c.rstd[i] = 1.0 / std::sqrt(var + kLnEps);
    c.xhat.row(i) = (x.row(i).array() - mean) * c.rstd[i];
    y.row(i) = c.xhat.row(i).cwiseProduct(g.row(0)) + b.row(0);
  }
  return y;
}

/// Returns dx; accumulates dg and db.
inline Matrix layer_norm_backward(const Matrix& dy, const LnCache& c, const Matrix& g, Matrix& dg,
                                  Matrix& db) {
  dg.row(0) += (dy.cwiseProduct(c.xhat)).colwise().sum();
  db.row(0) += dy.colwise().sum();
  const double e = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const Eigen::RowVectorXd dxhat = dy.row(i).cwiseProduct(g.row(0));
    const double mean_d = dxhat.sum() / e;
    const double mean_dx = dxhat.dot(c.xhat.row(i)) / e;
    dx.row(i) = c.rstd[i] * (dxhat.array() - mean_d - c.xhat.row(i).array() * mean_dx);
  }
  return dx;
}

inline Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

/// Adam moments for a list of parameter matrices.
class Adam {
 public:
  Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::vector<Matrix*> values, std::vector<const Matrix*> grads, double lr) {
    if (m1_.empty()) {
      for (const Matrix* v : values) {
        m1_.push_back(Matrix::Zero(v->rows(), v->cols()));
        m2_.push_back(Matrix::Zero(v->rows(), v->cols()));
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < values.size(); ++i) {
      m1_[i] = beta1_ * m1_[i] + (1.0 - beta1_) * *grads[i];
      m2_[i] = beta2_ * m2_[i] + (1.0 - beta2_) * grads[i]->cwiseAbs2();
      values[i]->array() -= lr * (m1_[i].array() / c1) / ((m2_[i].array() / c2).sqrt() + eps_);
    }
  }

 private:
  double beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<Matrix> m1_, m2_;
};

}  // namespace gmslm::nn

#endif  // GMSLM_SRC_NN_OPS_HPP_
