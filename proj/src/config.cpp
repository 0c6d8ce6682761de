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


#include "gmslm/config.hpp"

#include <fstream>

namespace gmslm::pipeline {

namespace {

void check_keys(const nlohmann::json& given, const nlohmann::json& known, const std::string& at) {
  if (!given.is_object()) return;
  require(known.is_object(), Errc::invalid_argument, "config key " + at + " is not a section");
  for (const auto& [key, value] : given.items()) {
    const std::string path = at.empty() ? key : at + "." + key;
    require(known.contains(key), Errc::invalid_argument, "unknown config key " + path);
    if (value.is_object()) check_keys(value, known.at(key), path);
  }
}

nlohmann::json synth_json(const SynthCorpusConfig& s) {
  return {{"scenes", s.scenes},
          {"animals", s.animals},
          {"call_types", s.call_types},
          {"calls_min", s.calls_min},
          {"calls_max", s.calls_max},
          {"gap_min_s", s.gap_min_s},
          {"gap_max_s", s.gap_max_s},
          {"type_cycle_prob", s.type_cycle_prob},
          {"noise_floor_db", s.noise_floor_db}};
}

}  // namespace

std::vector<ulm::ContextPolicy> ContextGrid::policies() const {
  std::vector<ulm::ContextPolicy> out{ulm::ContextPolicy{}};
  for (int w : windows)
    for (int k : keep_first) out.push_back(ulm::ContextPolicy{w, k});
  return out;
}

void RunConfig::validate() const {
  const auto& s = corpus.synth;
  require(s.scenes >= 2 && s.animals >= 2, Errc::invalid_argument,
          "synthetic corpus needs >= 2 scenes and >= 2 animals");
  require(s.call_types >= 1 && s.call_types <= 4, Errc::invalid_argument,
          "call_types must lie in [1, 4]");
  require(s.calls_min >= 2 && s.calls_max >= s.calls_min, Errc::invalid_argument,
          "need 2 <= calls_min <= calls_max");
  require(s.gap_min_s > 0.0 && s.gap_max_s >= s.gap_min_s && s.gap_max_s <= 10.0,
          Errc::invalid_argument, "gaps must satisfy 0 < gap_min <= gap_max <= 10");
  require(s.type_cycle_prob >= 0.0 && s.type_cycle_prob <= 1.0, Errc::invalid_argument,
          "type_cycle_prob must lie in [0, 1]");
  double sum = 0.0;
  for (double r : corpus.splits) {
    require(r >= 0.0, Errc::invalid_argument, "split ratios must be non-negative");
    sum += r;
  }
  require(std::abs(sum - 1.0) < 1e-9, Errc::invalid_argument, "split ratios must sum to 1");
  require(corpus.eval_split == "train" || corpus.eval_split == "valid" ||
              corpus.eval_split == "test",
          Errc::invalid_argument, "eval_split must be train, valid or test");
  detector.validate();
  const auto& km = quantizer.kmeans;
  require(km.k >= 1 && km.minibatch >= 1 && km.restarts >= 1 && km.max_epochs >= 1,
          Errc::invalid_argument, "quantizer sizes must be positive");
  require(quantizer.max_frames >= km.k, Errc::invalid_argument, "max_frames must be >= k");
  require(ngram.order >= 1 && ngram.order <= 6, Errc::invalid_argument,
          "ngram order must lie in [1, 6]");
  require(ngram.discount > 0.0 && ngram.discount < 1.0 && ngram.add_k >= 0.0,
          Errc::invalid_argument, "invalid ngram smoothing parameters");
  attn.model.validate();
  require(attn.train.steps >= 1 && attn.train.batch >= 1 && attn.train.lr >= 0.0,
          Errc::invalid_argument, "invalid attention training options");
  require(bench.phee_augment >= 1, Errc::invalid_argument, "phee_augment must be >= 1");
  for (int w : context_grid.windows)
    require(w >= 1, Errc::invalid_argument, "context windows must be >= 1");
  for (int k : context_grid.keep_first)
    require(k >= 0, Errc::invalid_argument, "keep_first must be >= 0");
  require(probe.epochs >= 1 && probe.batch >= 1 && probe.lr > 0.0, Errc::invalid_argument,
          "invalid probe options");
}

nlohmann::json RunConfig::to_json() const {
  const auto& km = quantizer.kmeans;
  const auto& tr = attn.train;
  // Vocabulary and seed of the attention model follow k and the root seed.
  nlohmann::json model = attn.model;
  model.erase("vocab");
  model.erase("seed");
  return {
      {"seed", seed},
      {"corpus",
       {{"manifest", corpus.manifest},
        {"splits", corpus.splits},
        {"eval_split", corpus.eval_split},
        {"synth", synth_json(corpus.synth)}}},
      {"detector", detector},
      {"features", dsp::to_string(features)},
      {"quantizer",
       {{"k", km.k},
        {"minibatch", km.minibatch},
        {"restarts", km.restarts},
        {"max_epochs", km.max_epochs},
        {"rel_tol", km.rel_tol},
        {"max_frames", quantizer.max_frames},
        {"dedup", quantizer.dedup}}},
      {"ngram",
       {{"order", ngram.order},
        {"smoothing", ulm::to_string(ngram.smoothing)},
        {"add_k", ngram.add_k},
        {"discount", ngram.discount}}},
      {"attn",
       {{"enabled", attn.enabled},
        {"model", model},
        {"train",
         {{"steps", tr.steps},
          {"lr", tr.lr},
          {"batch", tr.batch},
          {"chunk", tr.chunk},
          {"beta1", tr.beta1},
          {"beta2", tr.beta2},
          {"eps", tr.eps}}}}},
      {"bench", {{"phee_augment", bench.phee_augment}}},
      {"context_grid",
       {{"windows", context_grid.windows}, {"keep_first", context_grid.keep_first}}},
      {"probe",
       {{"hidden", probe.hidden},
        {"epochs", probe.epochs},
        {"batch", probe.batch},
        {"lr", probe.lr},
        {"decay_power", probe.decay_power},
        {"valid_fraction", probe.valid_fraction}}},
  };
}

std::string RunConfig::fingerprint() const { return hex64(fnv1a64(to_json().dump())); }

RunConfig config_from_json(const nlohmann::json& overrides) {
  require(overrides.is_object(), Errc::invalid_argument, "config must be a JSON object");
  const RunConfig defaults;
  nlohmann::json j = defaults.to_json();
  check_keys(overrides, j, "");
  j.merge_patch(overrides);

  RunConfig c;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& cj = j.at("corpus");
    c.corpus.manifest = cj.at("manifest").get<std::string>();
    c.corpus.splits = cj.at("splits").get<std::array<double, 3>>();
    c.corpus.eval_split = cj.at("eval_split").get<std::string>();
    const auto& sj = cj.at("synth");
    auto& s = c.corpus.synth;
    s.scenes = sj.at("scenes").get<int>();
    s.animals = sj.at("animals").get<int>();
    s.call_types = sj.at("call_types").get<int>();
    s.calls_min = sj.at("calls_min").get<int>();
    s.calls_max = sj.at("calls_max").get<int>();
    s.gap_min_s = sj.at("gap_min_s").get<double>();
    s.gap_max_s = sj.at("gap_max_s").get<double>();
    s.type_cycle_prob = sj.at("type_cycle_prob").get<double>();
    s.noise_floor_db = sj.at("noise_floor_db").get<double>();
    c.detector = j.at("detector").get<seg::DetectorParams>();
    c.features = dsp::parse_feature_kind(j.at("features").get<std::string>());
    const auto& qj = j.at("quantizer");
    auto& km = c.quantizer.kmeans;
    km.k = qj.at("k").get<int>();
    km.minibatch = qj.at("minibatch").get<int>();
    km.restarts = qj.at("restarts").get<int>();
    km.max_epochs = qj.at("max_epochs").get<int>();
    km.rel_tol = qj.at("rel_tol").get<double>();
    c.quantizer.max_frames = qj.at("max_frames").get<int>();
    c.quantizer.dedup = qj.at("dedup").get<bool>();
    const auto& nj = j.at("ngram");
    c.ngram.order = nj.at("order").get<int>();
    c.ngram.smoothing = ulm::parse_smoothing(nj.at("smoothing").get<std::string>());
    c.ngram.add_k = nj.at("add_k").get<double>();
    c.ngram.discount = nj.at("discount").get<double>();
    const auto& aj = j.at("attn");
    c.attn.enabled = aj.at("enabled").get<bool>();
    c.attn.model = aj.at("model").get<ulm::AttnConfig>();
    c.attn.model.vocab = km.k;
    const auto& tj = aj.at("train");
    auto& tr = c.attn.train;
    tr.steps = tj.at("steps").get<int>();
    tr.lr = tj.at("lr").get<double>();
    tr.batch = tj.at("batch").get<int>();
    tr.chunk = tj.at("chunk").get<int>();
    tr.beta1 = tj.at("beta1").get<double>();
    tr.beta2 = tj.at("beta2").get<double>();
    tr.eps = tj.at("eps").get<double>();
    c.bench.phee_augment = j.at("bench").at("phee_augment").get<int>();
    c.context_grid.windows = j.at("context_grid").at("windows").get<std::vector<int>>();
    c.context_grid.keep_first = j.at("context_grid").at("keep_first").get<std::vector<int>>();
    const auto& pj = j.at("probe");
    c.probe.hidden = pj.at("hidden").get<std::vector<int>>();
    c.probe.epochs = pj.at("epochs").get<int>();
    c.probe.batch = pj.at("batch").get<int>();
    c.probe.lr = pj.at("lr").get<double>();
    c.probe.decay_power = pj.at("decay_power").get<double>();
    c.probe.valid_fraction = pj.at("valid_fraction").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed config: ") + e.what());
  }
  // Seeds of the sub-models follow the root seed.
  c.quantizer.kmeans.seed = Rng::derive(c.seed, "quantizer").next_u64();
  c.attn.model.seed = Rng::derive(c.seed, "ulm.attn").next_u64();
  c.attn.train.seed = Rng::derive(c.seed, "ulm.attn.train").next_u64();
  c.probe.seed = Rng::derive(c.seed, "ulm.probe").next_u64();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::invalid_argument, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_argument, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace gmslm::pipeline
