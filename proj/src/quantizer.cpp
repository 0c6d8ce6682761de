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

#include "gmslm/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace gmslm::quant {

namespace {

double sq_dist(const double* a, const double* b, Eigen::Index d) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

// Nearest centroid of row `x`; writes the squared distance.
int nearest(const double* x, const Matrix& c, double* dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < c.rows(); ++j) {
    const double d = sq_dist(x, c.row(j).data(), c.cols());
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  if (dist) *dist = best_d;
  return best;
}

void check_dims(const Matrix& data, const Matrix& centroids) {
  require(centroids.rows() > 0, Errc::invalid_argument, "codebook is empty");
  require(data.cols() == centroids.cols(), Errc::invalid_argument,
          "feature dimension " + std::to_string(data.cols()) +
              " does not match codebook dimension " + std::to_string(centroids.cols()));
}

// Moves every centroid that owns no frame onto the frame farthest from its
// own nearest centroid, one empty cluster at a time.
void repair_empty(const Matrix& data, Matrix& centroids) {
  const Eigen::Index k = centroids.rows();
  for (int pass = 0; pass < k; ++pass) {
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    std::vector<double> dist(static_cast<std::size_t>(data.rows()));
    for (Eigen::Index i = 0; i < data.rows(); ++i)
      ++counts[nearest(data.row(i).data(), centroids, &dist[i])];
    auto empty = std::find(counts.begin(), counts.end(), 0);
    if (empty == counts.end()) return;
    const auto far = std::max_element(dist.begin(), dist.end()) - dist.begin();
    if (dist[far] <= 0.0) return;  // fewer distinct frames than clusters
    centroids.row(empty - counts.begin()) = data.row(far);
  }
}

}  // namespace

void to_json(nlohmann::json& j, const Codebook& cb) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < cb.k(); ++i)
    rows.push_back(std::vector<double>(cb.centroids.row(i).data(),
                                       cb.centroids.row(i).data() + cb.dims()));
  j = nlohmann::json{{"K", cb.k()},
                     {"D", cb.dims()},
                     {"feature_kind", dsp::to_string(cb.feature_kind)},
                     {"seed", cb.seed},
                     {"restarts", cb.restarts},
                     {"minibatch", cb.minibatch},
                     {"centroids", rows}};
  if (!cb.fingerprint.empty()) j["fingerprint"] = cb.fingerprint;
}

void from_json(const nlohmann::json& j, Codebook& cb) {
  const int k = j.at("K").get<int>();
  const int d = j.at("D").get<int>();
  const auto rows = j.at("centroids").get<std::vector<std::vector<double>>>();
  require(static_cast<int>(rows.size()) == k, Errc::format_error, "codebook row count != K");
  cb.centroids.resize(k, d);
  for (int i = 0; i < k; ++i) {
    require(static_cast<int>(rows[i].size()) == d, Errc::format_error,
            "codebook row width != D");
    for (int c = 0; c < d; ++c) {
      require(std::isfinite(rows[i][c]), Errc::format_error, "non-finite centroid");
      cb.centroids(i, c) = rows[i][c];
    }
  }
  cb.feature_kind = dsp::parse_feature_kind(j.value("feature_kind", std::string("mfcc")));
  cb.seed = j.value("seed", std::uint64_t{0});
  cb.restarts = j.value("restarts", 0);
  cb.minibatch = j.value("minibatch", 0);
  cb.fingerprint = j.value("fingerprint", std::string());
}

void save(const std::filesystem::path& path, const Codebook& cb) {
  std::ofstream out(path);
  require(static_cast<bool>(out), Errc::io_error, "cannot write " + path.string());
  out << nlohmann::json(cb).dump() << '\n';
}

Codebook load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io_error, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in).get<Codebook>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format_error, path.string() + ": " + e.what());
  }
}

Matrix stack_frames(std::span<const dsp::FeatureMatrix> features) {
  Eigen::Index rows = 0, dims = -1;
  for (const auto& f : features) {
    if (f.frames() == 0) continue;
    if (dims < 0) dims = f.dims();
    require(f.dims() == dims, Errc::invalid_argument, "feature matrices differ in dimension");
    rows += f.frames();
  }
  Matrix out(rows, std::max<Eigen::Index>(dims, 0));
  Eigen::Index at = 0;
  for (const auto& f : features) {
    if (f.frames() == 0) continue;
    out.middleRows(at, f.frames()) = f.rows;
    at += f.frames();
  }
  return out;
}

Matrix kmeans_pp_init(const Matrix& data, int k, Rng& rng) {
  const Eigen::Index n = data.rows();
  require(k >= 1 && n >= k, Errc::insufficient_data,
          "need at least K=" + std::to_string(k) + " frames, have " + std::to_string(n));
  Matrix centers(k, data.cols());
  centers.row(0) = data.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    d2[i] = sq_dist(data.row(i).data(), centers.row(0).data(), data.cols());
  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    Eigen::Index pick;
    if (total > 0.0)
      pick = static_cast<Eigen::Index>(rng.categorical(d2));
    else
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    centers.row(c) = data.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], sq_dist(data.row(i).data(), centers.row(c).data(), data.cols()));
  }
  return centers;
}

double inertia(const Matrix& data, const Matrix& centroids) {
  check_dims(data, centroids);
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    double d = 0.0;
    nearest(data.row(i).data(), centroids, &d);
    total += d;
  }
  return total;
}

double inertia(const dsp::FeatureMatrix& f, const Codebook& cb) {
  return inertia(f.rows, cb.centroids);
}

Matrix minibatch_kmeans(const Matrix& data, const Matrix& init, const KMeansOptions& opts,
                        Rng& rng, RestartTrace* trace) {
  check_dims(data, init);
  require(opts.minibatch >= 1 && opts.max_epochs >= 1, Errc::invalid_argument,
          "minibatch and max_epochs must be positive");
  const Eigen::Index n = data.rows();
  Matrix centers = init;
  std::vector<double> counts(static_cast<std::size_t>(centers.rows()), 0.0);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<int> labels;

  double current = inertia(data, centers);
  Matrix best = centers;
  double best_inertia = current;
  if (trace) {
    trace->init = init;
    trace->init_inertia = current;
  }

  int epoch = 0;
  for (; epoch < opts.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (Eigen::Index start = 0; start < n; start += opts.minibatch) {
      const Eigen::Index stop = std::min<Eigen::Index>(n, start + opts.minibatch);
      labels.resize(static_cast<std::size_t>(stop - start));
      for (Eigen::Index b = start; b < stop; ++b)
        labels[b - start] = nearest(data.row(order[b]).data(), centers, nullptr);
      for (Eigen::Index b = start; b < stop; ++b) {
        const int c = labels[b - start];
        counts[c] += 1.0;
        const double eta = 1.0 / counts[c];
        centers.row(c) = (1.0 - eta) * centers.row(c) + eta * data.row(order[b]);
      }
    }
    repair_empty(data, centers);
    const double next = inertia(data, centers);
    if (next < best_inertia) {
      best_inertia = next;
      best = centers;
    }
    const double improvement = current - next;
    current = next;
    if (improvement < opts.rel_tol * std::max(std::abs(current), 1e-300)) {
      ++epoch;
      break;
    }
  }
  // Full-batch Lloyd steps from the best mini-batch state.
  centers = best;
  std::vector<int> prev;
  for (int it = 0; it < opts.max_epochs; ++it) {
    const std::vector<int> lab = assign(data, centers);
    if (lab == prev) break;
    Matrix sum = Matrix::Zero(centers.rows(), centers.cols());
    std::vector<double> members(static_cast<std::size_t>(centers.rows()), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sum.row(lab[i]) += data.row(i);
      members[lab[i]] += 1.0;
    }
    for (Eigen::Index c = 0; c < centers.rows(); ++c)
      if (members[c] > 0.0) centers.row(c) = sum.row(c) / members[c];
    prev = lab;
  }
  const double polished = inertia(data, centers);
  if (polished <= best_inertia) {
    best_inertia = polished;
    best = centers;
  }
  if (trace) {
    trace->final_inertia = best_inertia;
    trace->epochs = epoch;
  }
  return best;
}

Codebook fit_codebook(const Matrix& data, const KMeansOptions& opts, FitTrace* trace) {
  require(opts.k >= 1, Errc::invalid_argument, "K must be positive");
  require(opts.restarts >= 1, Errc::invalid_argument, "restarts must be positive");
  require(data.rows() >= opts.k, Errc::insufficient_data,
          "need at least K=" + std::to_string(opts.k) + " frames, have " +
              std::to_string(data.rows()));
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    require(data.row(i).allFinite(), Errc::invalid_argument, "non-finite feature frame");

  FitTrace local;
  FitTrace& t = trace ? *trace : local;
  t = FitTrace{};
  Matrix best;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < opts.restarts; ++r) {
    Rng rng = Rng::derive(opts.seed, "quantizer.restart." + std::to_string(r));
    RestartTrace rt;
    const Matrix init = kmeans_pp_init(data, opts.k, rng);
    Matrix centers = minibatch_kmeans(data, init, opts, rng, &rt);
    if (rt.final_inertia < best_inertia) {
      best_inertia = rt.final_inertia;
      best = std::move(centers);
      t.best = r;
    }
    t.restarts.push_back(std::move(rt));
  }

  Codebook cb;
  cb.centroids = std::move(best);
  cb.seed = opts.seed;
  cb.restarts = opts.restarts;
  cb.minibatch = opts.minibatch;
  return cb;
}

Codebook fit_codebook(std::span<const dsp::FeatureMatrix> features, const KMeansOptions& opts,
                      FitTrace* trace) {
  Codebook cb = fit_codebook(stack_frames(features), opts, trace);
  for (const auto& f : features) {
    if (f.frames() > 0) {
      cb.feature_kind = f.kind;
      break;
    }
  }
  return cb;
}

std::vector<int> assign(const Matrix& data, const Matrix& centroids) {
  check_dims(data, centroids);
  std::vector<int> out(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    out[i] = nearest(data.row(i).data(), centroids, nullptr);
  return out;
}

units::UnitSequence encode(const dsp::FeatureMatrix& f, const Codebook& cb) {
  if (f.frames() == 0) return {};
  return assign(f.rows, cb.centroids);
}

dsp::FeatureMatrix reconstruct(const units::UnitSequence& u, const Codebook& cb,
                               double frame_stride_ms) {
  units::check_range(u, cb.k());
  dsp::FeatureMatrix f;
  f.kind = cb.feature_kind;
  f.frame_stride_ms = frame_stride_ms;
  f.rows.resize(static_cast<Eigen::Index>(u.size()), cb.dims());
  for (std::size_t t = 0; t < u.size(); ++t) f.rows.row(t) = cb.centroids.row(u[t]);
  return f;
}

}  // namespace gmslm::quant
