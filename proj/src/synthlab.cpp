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

#include "gmslm/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gmslm::synth {

namespace {

constexpr double kProbTol = 1e-12;

double ramp(double x) { return 0.5 - 0.5 * std::cos(std::numbers::pi * x); }

}  // namespace

void CallSpec::validate() const {
  require(f0_hz >= 5500.0 && f0_hz <= 10000.0, Errc::invalid_argument,
          "call f0 must lie in [5500, 10000] Hz");
  require(duration_s >= 0.0 && std::isfinite(duration_s), Errc::invalid_argument,
          "call duration must be finite and non-negative");
  require(fm_depth_hz >= 0.0 && fm_rate_hz >= 0.0, Errc::invalid_argument,
          "FM parameters must be non-negative");
  require(attack_s >= 0.0 && decay_s >= 0.0 && attack_s + decay_s <= duration_s + 1e-12,
          Errc::invalid_argument, "ramps must fit inside the call");
  require(std::isfinite(amplitude) && std::isfinite(sweep_hz), Errc::invalid_argument,
          "call amplitude and sweep must be finite");
}

void SceneSpec::validate() const {
  require(total_s > 0.0 && sample_rate > 0.0, Errc::invalid_argument,
          "scene length and rate must be positive");
  for (std::size_t i = 0; i < calls.size(); ++i) {
    calls[i].call.validate();
    const double end = calls[i].onset_s + calls[i].call.duration_s;
    require(calls[i].onset_s >= 0.0 && end <= total_s + 1e-9, Errc::invalid_argument,
            "call " + std::to_string(i) + " falls outside the scene");
    for (std::size_t j = 0; j < i; ++j) {
      const double other_end = calls[j].onset_s + calls[j].call.duration_s;
      require(end <= calls[j].onset_s || calls[i].onset_s >= other_end,
              Errc::invalid_argument, "calls " + std::to_string(j) + " and " +
                                          std::to_string(i) + " overlap");
    }
  }
}

std::vector<double> render_call(const CallSpec& c, double sample_rate) {
  c.validate();
  const auto n = static_cast<std::size_t>(std::lround(c.duration_s * sample_rate));
  std::vector<double> out(n);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    // Phase is the closed-form integral of
    // f0 + sweep * t / duration + depth * sin(2 pi rate t).
    double phase = c.f0_hz * t;
    if (c.duration_s > 0.0) phase += 0.5 * c.sweep_hz * t * t / c.duration_s;
    if (c.fm_rate_hz > 0.0)
      phase += c.fm_depth_hz * (1.0 - std::cos(two_pi * c.fm_rate_hz * t)) / (two_pi * c.fm_rate_hz);
    double env = 1.0;
    const double from_end = c.duration_s - t;
    if (c.attack_s > 0.0 && t < c.attack_s) env *= ramp(t / c.attack_s);
    if (c.decay_s > 0.0 && from_end < c.decay_s) env *= ramp(std::max(0.0, from_end) / c.decay_s);
    out[i] = c.amplitude * env * std::sin(two_pi * phase);
  }
  return out;
}

Scene synth_scene(const SceneSpec& s) {
  s.validate();
  Scene scene;
  scene.audio.sample_rate = s.sample_rate;
  const auto n = static_cast<std::size_t>(std::lround(s.total_s * s.sample_rate));
  scene.audio.samples.resize(n);
  Rng rng = Rng::derive(s.seed, "synth.noise");
  const double sigma = std::pow(10.0, s.noise_floor_db / 20.0);
  for (double& x : scene.audio.samples) x = sigma * rng.normal();

  std::vector<PlacedCall> calls = s.calls;
  std::sort(calls.begin(), calls.end(),
            [](const PlacedCall& a, const PlacedCall& b) { return a.onset_s < b.onset_s; });
  for (const PlacedCall& pc : calls) {
    const auto start = static_cast<std::size_t>(std::lround(pc.onset_s * s.sample_rate));
    const auto tone = render_call(pc.call, s.sample_rate);
    for (std::size_t i = 0; i < tone.size() && start + i < n; ++i)
      scene.audio.samples[start + i] += tone[i];
    scene.truth.push_back({pc.onset_s, pc.onset_s + pc.call.duration_s});
  }
  return scene;
}

void to_json(nlohmann::json& j, const CallSpec& c) {
  j = nlohmann::json{{"f0_hz", c.f0_hz},         {"duration_s", c.duration_s},
                     {"fm_depth_hz", c.fm_depth_hz}, {"fm_rate_hz", c.fm_rate_hz},
                     {"amplitude", c.amplitude}, {"attack_s", c.attack_s},
                     {"decay_s", c.decay_s},     {"sweep_hz", c.sweep_hz}};
}

void from_json(const nlohmann::json& j, CallSpec& c) {
  const CallSpec d;
  c.f0_hz = j.value("f0_hz", d.f0_hz);
  c.duration_s = j.value("duration_s", d.duration_s);
  c.fm_depth_hz = j.value("fm_depth_hz", d.fm_depth_hz);
  c.fm_rate_hz = j.value("fm_rate_hz", d.fm_rate_hz);
  c.amplitude = j.value("amplitude", d.amplitude);
  c.attack_s = j.value("attack_s", d.attack_s);
  c.decay_s = j.value("decay_s", d.decay_s);
  c.sweep_hz = j.value("sweep_hz", d.sweep_hz);
}

void to_json(nlohmann::json& j, const SceneSpec& s) {
  nlohmann::json calls = nlohmann::json::array();
  for (const auto& pc : s.calls) calls.push_back({{"onset_s", pc.onset_s}, {"call", pc.call}});
  j = nlohmann::json{{"total_s", s.total_s},
                     {"noise_floor_db", s.noise_floor_db},
                     {"sample_rate", s.sample_rate},
                     {"seed", s.seed},
                     {"calls", calls}};
}

void from_json(const nlohmann::json& j, SceneSpec& s) {
  const SceneSpec d;
  s.total_s = j.value("total_s", d.total_s);
  s.noise_floor_db = j.value("noise_floor_db", d.noise_floor_db);
  s.sample_rate = j.value("sample_rate", d.sample_rate);
  s.seed = j.value("seed", d.seed);
  s.calls.clear();
  for (const auto& c : j.value("calls", nlohmann::json::array()))
    s.calls.push_back({c.at("onset_s").get<double>(), c.at("call").get<CallSpec>()});
}

// ---------------------------------------------------------------------------

void MarkovChain::validate() const {
  const int k = states();
  require(k >= 1, Errc::invalid_argument, "chain needs at least one state");
  require(P.rows() == k && P.cols() == k, Errc::invalid_argument,
          "transition matrix must be K x K");
  require(pi.minCoeff() >= 0.0 && std::abs(pi.sum() - 1.0) <= kProbTol,
          Errc::invalid_argument, "initial distribution must be a probability vector");
  for (int i = 0; i < k; ++i)
    require(P.row(i).minCoeff() >= 0.0 && std::abs(P.row(i).sum() - 1.0) <= kProbTol,
            Errc::invalid_argument, "transition row " + std::to_string(i) + " is not stochastic");
}

MarkovChain MarkovChain::uniform(int k) {
  MarkovChain c;
  c.pi = Vector::Constant(k, 1.0 / k);
  c.P = Matrix::Constant(k, k, 1.0 / k);
  return c;
}

MarkovChain MarkovChain::identity(int k, int start_state) {
  require(start_state >= 0 && start_state < k, Errc::invalid_argument, "start state out of range");
  MarkovChain c;
  c.pi = Vector::Zero(k);
  c.pi[start_state] = 1.0;
  c.P = Matrix::Identity(k, k);
  return c;
}

void to_json(nlohmann::json& j, const MarkovChain& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < c.P.rows(); ++i) {
    std::vector<double> r(c.P.row(i).data(), c.P.row(i).data() + c.P.cols());
    rows.push_back(r);
  }
  j = nlohmann::json{{"pi", std::vector<double>(c.pi.data(), c.pi.data() + c.pi.size())},
                     {"P", rows}};
}

void from_json(const nlohmann::json& j, MarkovChain& c) {
  const auto pi = j.at("pi").get<std::vector<double>>();
  const auto rows = j.at("P").get<std::vector<std::vector<double>>>();
  c.pi = Eigen::Map<const Vector>(pi.data(), static_cast<Eigen::Index>(pi.size()));
  c.P.resize(static_cast<Eigen::Index>(rows.size()),
             rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(static_cast<Eigen::Index>(rows[i].size()) == c.P.cols(), Errc::invalid_argument,
            "ragged transition matrix");
    for (std::size_t k = 0; k < rows[i].size(); ++k) c.P(i, k) = rows[i][k];
  }
  c.validate();
}

std::vector<units::UnitSequence> markov_corpus(const MarkovChain& c, int n_seqs, int len,
                                               std::uint64_t seed) {
  c.validate();
  require(n_seqs >= 0 && len >= 0, Errc::invalid_argument, "counts must be non-negative");
  Rng rng = Rng::derive(seed, "synth.markov");
  const int k = c.states();
  std::vector<std::vector<double>> rows(k);
  for (int i = 0; i < k; ++i) rows[i].assign(c.P.row(i).data(), c.P.row(i).data() + k);
  const std::vector<double> init(c.pi.data(), c.pi.data() + k);

  std::vector<units::UnitSequence> out(static_cast<std::size_t>(n_seqs));
  for (auto& seq : out) {
    seq.resize(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t)
      seq[t] = static_cast<int>(rng.categorical(t == 0 ? init : rows[seq[t - 1]]));
  }
  return out;
}

Vector stationary_distribution(const MarkovChain& c) {
  c.validate();
  const int k = c.states();
  const Matrix lazy = 0.5 * (Matrix::Identity(k, k) + c.P);
  Eigen::RowVectorXd mu = c.pi.transpose();
  constexpr int kMaxIter = 200000;
  for (int it = 0; it < kMaxIter; ++it) {
    Eigen::RowVectorXd next = mu * lazy;
    next /= next.sum();
    const double delta = (next - mu).cwiseAbs().sum();
    mu = next;
    if (delta < 1e-14) return mu.transpose();
  }
  throw Error(Errc::no_stationary_distribution, "power iteration did not converge");
}

double chain_ppl(const MarkovChain& c) {
  const Vector mu = stationary_distribution(c);
  double h = 0.0;
  for (int i = 0; i < c.states(); ++i) {
    double row = 0.0;
    for (int j = 0; j < c.states(); ++j) {
      const double p = c.P(i, j);
      if (p > 0.0) row -= p * std::log(p);
    }
    h += mu[i] * row;
  }
  return std::exp(h);
}

MarkovChain sparse_cycle_chain(int k, int successors, double leak, std::uint64_t seed) {
  require(k >= 2 && successors >= 1 && successors < k, Errc::invalid_argument,
          "need 1 <= successors < k");
  require(leak >= 0.0 && leak < 1.0, Errc::invalid_argument, "leak must lie in [0, 1)");
  Rng rng = Rng::derive(seed, "synth.sparse_chain");
  std::vector<int> cycle(k);
  for (int j = 0; j < k; ++j) cycle[j] = j;
  rng.shuffle(cycle);
  MarkovChain c;
  c.pi = Vector::Constant(k, 1.0 / k);
  c.P = Matrix::Constant(k, k, leak / (k - successors));
  for (int pos = 0; pos < k; ++pos)
    for (int s = 1; s <= successors; ++s)
      c.P(cycle[pos], cycle[(pos + s) % k]) = (1.0 - leak) / successors;
  return c;
}

std::size_t ContextChain::context_index(std::span<const int> history) const {
  require(static_cast<int>(history.size()) == order, Errc::invalid_argument,
          "history length must equal the chain order");
  std::size_t idx = 0;
  for (int s : history) idx = idx * static_cast<std::size_t>(k) + static_cast<std::size_t>(s);
  return idx;
}

ContextChain random_context_chain(int k, int order, int successors, double leak,
                                  std::uint64_t seed) {
  require(k >= 2 && order >= 1 && successors >= 1 && successors < k, Errc::invalid_argument,
          "invalid context chain shape");
  require(leak >= 0.0 && leak < 1.0, Errc::invalid_argument, "leak must lie in [0, 1)");
  ContextChain c;
  c.k = k;
  c.order = order;
  std::size_t contexts = 1;
  for (int i = 0; i < order; ++i) contexts *= static_cast<std::size_t>(k);
  c.table = Matrix::Constant(static_cast<Eigen::Index>(contexts), k, leak / (k - successors));
  Rng rng = Rng::derive(seed, "synth.context_chain");
  for (std::size_t r = 0; r < contexts; ++r) {
    std::vector<int> states(k);
    for (int j = 0; j < k; ++j) states[j] = j;
    rng.shuffle(states);
    for (int s = 0; s < successors; ++s)
      c.table(static_cast<Eigen::Index>(r), states[s]) = (1.0 - leak) / successors;
    c.table.row(static_cast<Eigen::Index>(r)) /= c.table.row(static_cast<Eigen::Index>(r)).sum();
  }
  return c;
}

std::vector<units::UnitSequence> context_corpus(const ContextChain& c, int n_seqs, int len,
                                                std::uint64_t seed) {
  Rng rng = Rng::derive(seed, "synth.context_corpus");
  std::vector<units::UnitSequence> out(static_cast<std::size_t>(n_seqs));
  std::vector<double> row(static_cast<std::size_t>(c.k));
  for (auto& seq : out) {
    seq.resize(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t) {
      if (t < c.order) {
        seq[t] = static_cast<int>(rng.below(static_cast<std::uint64_t>(c.k)));
        continue;
      }
      const auto idx = c.context_index(std::span<const int>(seq.data() + t - c.order, c.order));
      for (int j = 0; j < c.k; ++j) row[j] = c.table(static_cast<Eigen::Index>(idx), j);
      seq[t] = static_cast<int>(rng.categorical(row));
    }
  }
  return out;
}

}  // namespace gmslm::synth
