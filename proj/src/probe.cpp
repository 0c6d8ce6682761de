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


#include "gmslm/probe.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "nn_ops.hpp"

namespace gmslm::ulm {

namespace {

int class_count(const std::vector<int>& labels) {
  require(!labels.empty(), Errc::invalid_argument, "probe needs labelled data");
  std::set<int> distinct;
  for (int l : labels) {
    require(l >= 0, Errc::invalid_argument, "labels must be non-negative");
    distinct.insert(l);
  }
  require(distinct.size() >= 2, Errc::invalid_argument, "probe needs at least two classes");
  return *distinct.rbegin() + 1;
}

Matrix rows_of(const Matrix& x, std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = x.row(idx[i]);
  return out;
}

}  // namespace

struct ProbeClassifier::Grads {
  std::vector<Layer> hidden;
  Matrix out_w, out_b;
};

ProbeClassifier::ProbeClassifier(int input_dim, int classes, const std::vector<int>& hidden,
                                 std::uint64_t seed)
    : classes_(classes),
      mean_(Vector::Zero(input_dim)),
      scale_(Vector::Ones(input_dim)) {
  require(input_dim >= 1 && classes >= 2, Errc::invalid_argument,
          "probe needs a positive input size and two or more classes");
  Rng rng = Rng::derive(seed, "ulm.probe.init");
  auto init = [&rng](int in, int out) {
    const double bound = std::sqrt(6.0 / in);
    Matrix w(in, out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
    return w;
  };
  int in = input_dim;
  for (int width : hidden) {
    require(width >= 1, Errc::invalid_argument, "hidden widths must be positive");
    hidden_.push_back(Layer{init(in, width), Matrix::Zero(1, width), Matrix::Ones(1, width),
                            Matrix::Zero(1, width)});
    in = width;
  }
  out_w_ = init(in, classes) * std::sqrt(0.5);
  out_b_ = Matrix::Zero(1, classes);
}

Matrix ProbeClassifier::logits(const Matrix& x) const {
  require(x.cols() == input_dim(), Errc::invalid_argument, "probe input has the wrong width");
  Matrix h = (x.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array();
  nn::LnCache cache;
  for (const Layer& l : hidden_) {
    Matrix z = h * l.w;
    z.rowwise() += l.b.row(0);
    h = nn::layer_norm(z, l.g, l.beta, cache).cwiseMax(0.0);
  }
  Matrix out = h * out_w_;
  out.rowwise() += out_b_.row(0);
  return out;
}

std::vector<int> ProbeClassifier::predict(const Matrix& x) const {
  const Matrix z = logits(x);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) z.row(i).maxCoeff(&out[i]);
  return out;
}

namespace {

nlohmann::json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto data = j.at("data").get<std::vector<double>>();
  require(static_cast<Eigen::Index>(data.size()) == m.size(), Errc::format_error,
          "matrix size mismatch");
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

}  // namespace

nlohmann::json ProbeClassifier::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& l : hidden_)
    layers.push_back({{"w", matrix_json(l.w)}, {"b", matrix_json(l.b)},
                      {"g", matrix_json(l.g)}, {"beta", matrix_json(l.beta)}});
  return {{"format", "gmslm.probe"},
          {"version", 1},
          {"classes", classes_},
          {"mean", std::vector<double>(mean_.data(), mean_.data() + mean_.size())},
          {"scale", std::vector<double>(scale_.data(), scale_.data() + scale_.size())},
          {"hidden", layers},
          {"out_w", matrix_json(out_w_)},
          {"out_b", matrix_json(out_b_)}};
}

ProbeClassifier ProbeClassifier::from_json(const nlohmann::json& j) {
  require(j.value("format", std::string()) == "gmslm.probe" && j.value("version", 0) == 1,
          Errc::format_error, "not a version-1 probe");
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto scale = j.at("scale").get<std::vector<double>>();
  ProbeClassifier clf(static_cast<int>(mean.size()), j.at("classes").get<int>(), {}, 0);
  clf.mean_ = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  clf.scale_ = Eigen::Map<const Vector>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  for (const auto& l : j.at("hidden"))
    clf.hidden_.push_back(Layer{matrix_from(l.at("w")), matrix_from(l.at("b")),
                                matrix_from(l.at("g")), matrix_from(l.at("beta"))});
  clf.out_w_ = matrix_from(j.at("out_w"));
  clf.out_b_ = matrix_from(j.at("out_b"));
  return clf;
}

ProbeClassifier train_probe(const Matrix& x, const std::vector<int>& labels,
                            const ProbeOptions& opts, std::vector<double>* epoch_loss) {
  require(x.rows() == static_cast<Eigen::Index>(labels.size()), Errc::invalid_argument,
          "one label per embedding row is required");
  const int classes = class_count(labels);
  require(opts.epochs >= 1 && opts.batch >= 1 && opts.lr > 0.0, Errc::invalid_argument,
          "epochs, batch and lr must be positive");

  ProbeClassifier clf(static_cast<int>(x.cols()), classes, opts.hidden, opts.seed);
  const double n = static_cast<double>(x.rows());
  clf.mean_ = x.colwise().mean().transpose();
  clf.scale_ = ((x.rowwise() - clf.mean_.transpose()).array().square().colwise().sum() / n)
                   .sqrt()
                   .transpose();
  for (Eigen::Index i = 0; i < clf.scale_.size(); ++i)
    if (!(clf.scale_[i] > 1e-12)) clf.scale_[i] = 1.0;

  ProbeClassifier::Grads grads;
  std::vector<Matrix*> values;
  std::vector<const Matrix*> gptr;
  grads.hidden.resize(clf.hidden_.size());
  for (std::size_t i = 0; i < clf.hidden_.size(); ++i) {
    auto& l = clf.hidden_[i];
    auto& g = grads.hidden[i];
    for (auto [v, d] : {std::pair{&l.w, &g.w}, {&l.b, &g.b}, {&l.g, &g.g}, {&l.beta, &g.beta}}) {
      *d = Matrix::Zero(v->rows(), v->cols());
      values.push_back(v);
      gptr.push_back(d);
    }
  }
  grads.out_w = Matrix::Zero(clf.out_w_.rows(), clf.out_w_.cols());
  grads.out_b = Matrix::Zero(1, classes);
  values.push_back(&clf.out_w_);
  gptr.push_back(&grads.out_w);
  values.push_back(&clf.out_b_);
  gptr.push_back(&grads.out_b);
  nn::Adam adam(0.9, 0.999, 1e-8);

  const Matrix xs =
      (x.rowwise() - clf.mean_.transpose()).array().rowwise() / clf.scale_.transpose().array();
  std::vector<std::size_t> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = Rng::derive(opts.seed, "ulm.probe.train");
  const std::size_t per_epoch = (order.size() + opts.batch - 1) / opts.batch;
  const double total_steps = static_cast<double>(per_epoch) * opts.epochs;
  int step = 0;
  const std::size_t depth = clf.hidden_.size();
  std::vector<Matrix> inputs(depth + 1), pre(depth);
  std::vector<nn::LnCache> caches(depth);

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t at = 0; at < order.size(); at += opts.batch) {
      const std::size_t end = std::min(order.size(), at + opts.batch);
      const std::span<const std::size_t> idx(order.data() + at, end - at);
      const double b = static_cast<double>(idx.size());

      inputs[0] = rows_of(xs, idx);
      for (std::size_t i = 0; i < depth; ++i) {
        const auto& l = clf.hidden_[i];
        Matrix z = inputs[i] * l.w;
        z.rowwise() += l.b.row(0);
        pre[i] = nn::layer_norm(z, l.g, l.beta, caches[i]);
        inputs[i + 1] = pre[i].cwiseMax(0.0);
      }
      Matrix logits = inputs[depth] * clf.out_w_;
      logits.rowwise() += clf.out_b_.row(0);
      const Matrix logp = nn::log_softmax_rows(logits);

      Matrix d = logp.array().exp();
      for (std::size_t r = 0; r < idx.size(); ++r) {
        loss_sum -= logp(r, labels[idx[r]]);
        d(r, labels[idx[r]]) -= 1.0;
      }
      d /= b;

      for (auto& g : grads.hidden) {
        g.g.setZero();
        g.beta.setZero();
      }
      grads.out_w = inputs[depth].transpose() * d;
      grads.out_b = d.colwise().sum();
      Matrix dh = d * clf.out_w_.transpose();
      for (std::size_t i = depth; i-- > 0;) {
        const auto& l = clf.hidden_[i];
        auto& g = grads.hidden[i];
        const Matrix dy = dh.cwiseProduct((pre[i].array() > 0.0).cast<double>().matrix());
        const Matrix dz = nn::layer_norm_backward(dy, caches[i], l.g, g.g, g.beta);
        g.w = inputs[i].transpose() * dz;
        g.b = dz.colwise().sum();
        dh = dz * l.w.transpose();
      }
      const double lr = opts.lr * std::pow(1.0 - step / total_steps, opts.decay_power);
      adam.step(values, gptr, lr);
      ++step;
    }
    if (epoch_loss) epoch_loss->push_back(loss_sum / n);
  }
  return clf;
}

ProbeMetrics probe_eval(const ProbeClassifier& clf, const Matrix& x,
                        const std::vector<int>& labels) {
  require(x.rows() == static_cast<Eigen::Index>(labels.size()) && !labels.empty(),
          Errc::invalid_argument, "one label per embedding row is required");
  const int c = clf.classes();
  const auto pred = clf.predict(x);
  std::vector<double> tp(c, 0.0), fp(c, 0.0), fn(c, 0.0);
  double correct = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < c, Errc::invalid_argument, "label outside the classes");
    if (pred[i] == labels[i]) {
      tp[labels[i]] += 1.0;
      correct += 1.0;
    } else {
      fp[pred[i]] += 1.0;
      fn[labels[i]] += 1.0;
    }
  }
  ProbeMetrics m;
  int present = 0;
  for (int k = 0; k < c; ++k) {
    if (tp[k] + fn[k] == 0.0) continue;  // class absent from this data
    ++present;
    const double r = tp[k] / (tp[k] + fn[k]);
    const double p = tp[k] + fp[k] > 0.0 ? tp[k] / (tp[k] + fp[k]) : 0.0;
    m.recall += r;
    m.precision += p;
    m.f1 += r + p > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  m.recall /= present;
  m.precision /= present;
  m.f1 /= present;
  m.n = static_cast<int>(labels.size());
  m.accuracy = correct / m.n;
  return m;
}

Split balanced_split(const std::vector<int>& labels, double valid_fraction, std::uint64_t seed) {
  require(valid_fraction > 0.0 && valid_fraction < 1.0, Errc::invalid_argument,
          "validation fraction must lie in (0, 1)");
  const int c = class_count(labels);
  Rng rng = Rng::derive(seed, "ulm.probe.split");
  Split s;
  for (int k = 0; k < c; ++k) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == k) members.push_back(i);
    rng.shuffle(members);
    std::size_t nv = static_cast<std::size_t>(std::lround(valid_fraction * members.size()));
    if (members.size() >= 2) nv = std::clamp<std::size_t>(nv, 1, members.size() - 1);
    s.valid.insert(s.valid.end(), members.begin(), members.begin() + nv);
    s.train.insert(s.train.end(), members.begin() + nv, members.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.valid.begin(), s.valid.end());
  return s;
}

ProbeMetrics probe_experiment(const Matrix& x, const std::vector<int>& labels,
                              const ProbeOptions& opts) {
  const Split s = balanced_split(labels, opts.valid_fraction, opts.seed);
  std::vector<int> ltrain, lvalid;
  for (auto i : s.train) ltrain.push_back(labels[i]);
  for (auto i : s.valid) lvalid.push_back(labels[i]);
  const auto clf = train_probe(rows_of(x, s.train), ltrain, opts);
  return probe_eval(clf, rows_of(x, s.valid), lvalid);
}

}  // namespace gmslm::ulm
