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


#include "gmslm/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "gmslm/attn.hpp"
#include "gmslm/bench.hpp"
#include "gmslm/manifest.hpp"
#include "gmslm/metrics.hpp"
#include "gmslm/ngram.hpp"
#include "gmslm/probe.hpp"
#include "gmslm/quantizer.hpp"
#include "gmslm/segmenter.hpp"
#include "gmslm/synthlab.hpp"
#include "gmslm/units.hpp"
#include "gmslm/wav.hpp"

namespace gmslm::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& p) {
  std::ifstream in(p);
  require(static_cast<bool>(in), Errc::io_error, "cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::format_error, p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  require(static_cast<bool>(out), Errc::io_error, "cannot write " + p.string());
  out << text;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(static_cast<bool>(in), Errc::io_error, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_fp(const std::string& found, const std::string& expected, const fs::path& what) {
  require(found == expected, Errc::fingerprint_mismatch,
          what.string() + " belongs to config " + (found.empty() ? "<none>" : found) +
              ", this run is " + expected);
}

json fp_json(const fs::path& p, const std::string& fp) {
  json j = read_json(p);
  check_fp(j.value("fingerprint", std::string()), fp, p);
  return j;
}

std::vector<units::UnitSequence> read_units(const fs::path& p, const std::string& fp) {
  std::string found;
  auto seqs = units::read_file(p, &found);
  check_fp(found, fp, p);
  return seqs;
}

dsp::FeatureMatrix read_features(const fs::path& p, const std::string& fp) {
  auto f = dsp::from_csv(read_text(p));
  check_fp(f.fingerprint, fp, p);
  return f;
}

dsp::Waveform slice(const dsp::Waveform& w, double start_s, double end_s) {
  const std::size_t n = w.samples.size();
  const auto b = std::min(n, static_cast<std::size_t>(std::llround(start_s * w.sample_rate)));
  const auto e = std::min(n, static_cast<std::size_t>(std::llround(end_s * w.sample_rate)));
  dsp::Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(w.samples.begin() + b, w.samples.begin() + std::max(b, e));
  return out;
}

std::uint64_t sub_seed(std::uint64_t root, const std::string& tag) {
  return Rng::derive(root, tag).next_u64();
}

// ---- artifacts shared between stages ----

struct WindowRec {
  std::string id;
  std::size_t record = 0;
  std::string split;
  double start_s = 0.0;
  double end_s = 0.0;
  std::vector<seg::CallSegment> calls;  // relative to start_s
};

struct CallRec {
  std::string id;
  std::size_t record = 0;
  std::string split;
  double onset_s = 0.0;
  double offset_s = 0.0;
  int animal = -1;
  int type = -1;
};

struct Truth {
  int caller = -1;
  int receiver = -1;
  std::vector<SynthCall> calls;
};

struct Run {
  const RunConfig& cfg;
  const RunOptions& opts;
  std::string fp;

  fs::path at(const std::string& rel) const { return opts.out_dir / rel; }

  corpus::CorpusManifest manifest() const {
    auto m = corpus::read_manifest(at("corpus/manifest.jsonl"));
    for (auto& r : m.records) r.path = (at("corpus") / r.path).lexically_normal().string();
    return m;
  }

  static fs::path truth_path(const fs::path& wav_path) {
    return wav_path.parent_path() / (wav_path.stem().string() + ".truth.json");
  }

  std::vector<WindowRec> windows() const {
    const json j = fp_json(at("segments/windows.json"), fp);
    std::vector<WindowRec> out;
    for (const auto& w : j.at("windows")) {
      WindowRec r{w.at("id"), w.at("record"), w.at("split"), w.at("start_s"), w.at("end_s"), {}};
      for (const auto& c : w.at("calls")) r.calls.push_back({c.at(0), c.at(1)});
      out.push_back(std::move(r));
    }
    return out;
  }

  std::vector<CallRec> calls() const {
    const json j = fp_json(at("features/calls.json"), fp);
    std::vector<CallRec> out;
    for (const auto& c : j.at("calls"))
      out.push_back(CallRec{c.at("id"), c.at("record"), c.at("split"), c.at("onset_s"),
                            c.at("offset_s"), c.at("animal"), c.at("type")});
    return out;
  }
};

// ---- stages ----

void stage_synth(const Run& run) {
  const auto& cc = run.cfg.corpus;
  corpus::CorpusManifest m;
  if (!cc.manifest.empty()) {
    const fs::path src(cc.manifest);
    m = corpus::read_manifest(src);
    for (auto& r : m.records)
      r.path = fs::absolute(src.parent_path() / r.path).lexically_normal().string();
  } else {
    const auto scenes = make_synthetic_corpus(cc.synth, sub_seed(run.cfg.seed, "synth"));
    for (const auto& s : scenes) {
      const fs::path wav_path = run.at("corpus/" + s.name + ".wav");
      fs::create_directories(wav_path.parent_path());
      wav::write(wav_path, s.audio);
      json calls = json::array();
      for (const auto& c : s.calls)
        calls.push_back({{"onset_s", c.onset_s}, {"offset_s", c.offset_s},
                         {"animal", c.animal}, {"type", c.type}});
      write_json(Run::truth_path(wav_path), {{"fingerprint", run.fp},
                                             {"caller", s.caller},
                                             {"receiver", s.receiver},
                                             {"calls", calls}});
      corpus::ManifestRecord r;
      r.path = s.name + ".wav";
      r.duration_s = s.audio.duration_s();
      r.caller_id = animal_name(s.caller);
      r.receiver_id = animal_name(s.receiver);
      m.records.push_back(std::move(r));
    }
  }
  bool unsplit = false;
  for (const auto& r : m.records) unsplit = unsplit || r.split.empty();
  if (unsplit) m = corpus::split_manifest(m, cc.splits, sub_seed(run.cfg.seed, "cli.split"));
  fs::create_directories(run.at("corpus"));
  corpus::write_manifest(run.at("corpus/manifest.jsonl"), m);
}

std::optional<Truth> load_truth(const fs::path& wav_path) {
  const fs::path p = Run::truth_path(wav_path);
  if (!fs::exists(p)) return std::nullopt;
  const json j = read_json(p);
  Truth t;
  t.caller = j.value("caller", -1);
  t.receiver = j.value("receiver", -1);
  for (const auto& c : j.at("calls"))
    t.calls.push_back({c.at("onset_s"), c.at("offset_s"), c.value("animal", -1),
                       c.value("type", -1)});
  return t;
}

void stage_segment(const Run& run) {
  const auto m = run.manifest();
  struct Out {
    std::vector<seg::SegmentWindow> windows;
    std::size_t predicted = 0, truth = 0;
    int matches = 0;
    bool has_truth = false;
  };
  std::vector<Out> outs(m.records.size());
  parallel_for(m.records.size(), run.opts.jobs, [&](std::size_t i) {
    const auto audio = wav::read_16k(m.records[i].path);
    const auto calls = seg::detect_calls(audio, run.cfg.detector);
    outs[i].windows = seg::pack_windows(audio, calls);
    outs[i].predicted = calls.size();
    if (auto t = load_truth(m.records[i].path)) {
      std::vector<seg::CallSegment> truth;
      for (const auto& c : t->calls) truth.push_back({c.onset_s, c.offset_s});
      outs[i].matches = seg::score_detection(calls, truth).matches;
      outs[i].truth = truth.size();
      outs[i].has_truth = true;
    }
  });

  json windows = json::array();
  std::size_t predicted = 0, truth = 0, with_truth = 0;
  int matches = 0;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const std::string stem = fs::path(m.records[i].path).stem().string();
    for (std::size_t w = 0; w < outs[i].windows.size(); ++w) {
      const auto& win = outs[i].windows[w];
      json calls = json::array();
      for (const auto& c : win.calls) calls.push_back({c.onset_s, c.offset_s});
      windows.push_back({{"id", stem + "_w" + std::to_string(w)},
                         {"record", i},
                         {"split", m.records[i].split},
                         {"start_s", win.start_s},
                         {"end_s", win.end_s},
                         {"calls", calls}});
    }
    if (outs[i].has_truth) {
      ++with_truth;
      predicted += outs[i].predicted;
      truth += outs[i].truth;
      matches += outs[i].matches;
    }
  }
  write_json(run.at("segments/windows.json"), {{"fingerprint", run.fp}, {"windows", windows}});
  json summary{{"fingerprint", run.fp}, {"records", m.records.size()},
               {"windows", windows.size()}, {"records_with_truth", with_truth},
               {"predicted", predicted}, {"truth", truth}, {"matches", matches}};
  summary["precision"] =
      predicted > 0 ? static_cast<double>(matches) / predicted : (truth == 0 ? 1.0 : 0.0);
  summary["recall"] = truth > 0 ? static_cast<double>(matches) / truth : 1.0;
  write_json(run.at("segments/summary.json"), summary);
}

void stage_features(const Run& run) {
  const auto m = run.manifest();
  const auto windows = run.windows();
  std::vector<std::vector<std::size_t>> by_record(m.records.size());
  for (std::size_t w = 0; w < windows.size(); ++w) by_record[windows[w].record].push_back(w);
  std::vector<std::vector<CallRec>> calls(m.records.size());
  const auto kind = run.cfg.features;

  parallel_for(m.records.size(), run.opts.jobs, [&](std::size_t i) {
    const auto audio = wav::read_16k(m.records[i].path);
    for (std::size_t w : by_record[i]) {
      auto f = featurize(slice(audio, windows[w].start_s, windows[w].end_s), kind);
      f.fingerprint = run.fp;
      write_text(run.at("features/windows/" + windows[w].id + ".csv"), dsp::to_csv(f));
    }
    const auto truth = load_truth(m.records[i].path);
    if (!truth) return;
    const std::string stem = fs::path(m.records[i].path).stem().string();
    for (std::size_t c = 0; c < truth->calls.size(); ++c) {
      const auto& tc = truth->calls[c];
      CallRec rec{stem + "_c" + std::to_string(c), i, m.records[i].split, tc.onset_s,
                  tc.offset_s, tc.animal, tc.type};
      auto f = featurize(slice(audio, tc.onset_s, tc.offset_s), kind);
      f.fingerprint = run.fp;
      write_text(run.at("features/calls/" + rec.id + ".csv"), dsp::to_csv(f));
      calls[i].push_back(std::move(rec));
    }
  });

  json all = json::array();
  for (const auto& rec_calls : calls)
    for (const auto& c : rec_calls)
      all.push_back({{"id", c.id}, {"record", c.record}, {"split", c.split},
                     {"onset_s", c.onset_s}, {"offset_s", c.offset_s},
                     {"animal", c.animal}, {"type", c.type}});
  write_json(run.at("features/calls.json"), {{"fingerprint", run.fp}, {"calls", all}});
}

units::UnitSequence encode_units(const dsp::FeatureMatrix& f, const quant::Codebook& cb,
                                 bool dedup) {
  auto u = quant::encode(f, cb);
  return dedup ? units::collapsed(u) : u;
}

void stage_quantize(const Run& run) {
  const auto windows = run.windows();
  const auto calls = run.calls();
  std::vector<dsp::FeatureMatrix> train;
  for (const auto& w : windows)
    if (w.split == "train")
      train.push_back(read_features(run.at("features/windows/" + w.id + ".csv"), run.fp));
  require(!train.empty(), Errc::insufficient_data, "no training windows to fit the codebook");
  Matrix data = quant::stack_frames(train);
  const auto cap = static_cast<Eigen::Index>(run.cfg.quantizer.max_frames);
  if (data.rows() > cap) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(data.rows()));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
    Rng rng = Rng::derive(run.cfg.seed, "quantizer.subsample");
    rng.shuffle(idx);
    idx.resize(static_cast<std::size_t>(cap));
    std::sort(idx.begin(), idx.end());
    Matrix sub(cap, data.cols());
    for (Eigen::Index r = 0; r < cap; ++r) sub.row(r) = data.row(idx[r]);
    data = std::move(sub);
  }
  auto cb = quant::fit_codebook(data, run.cfg.quantizer.kmeans);
  cb.feature_kind = run.cfg.features;
  cb.fingerprint = run.fp;
  fs::create_directories(run.at("models"));
  quant::save(run.at("models/codebook.json"), cb);

  const bool dedup = run.cfg.quantizer.dedup;
  std::vector<units::UnitSequence> wu(windows.size()), cu(calls.size());
  parallel_for(windows.size(), run.opts.jobs, [&](std::size_t i) {
    wu[i] = encode_units(read_features(run.at("features/windows/" + windows[i].id + ".csv"),
                                       run.fp),
                         cb, dedup);
  });
  parallel_for(calls.size(), run.opts.jobs, [&](std::size_t i) {
    cu[i] = encode_units(read_features(run.at("features/calls/" + calls[i].id + ".csv"), run.fp),
                         cb, dedup);
  });
  fs::create_directories(run.at("units"));
  units::write_file(run.at("units/windows.txt"), wu, run.fp);
  units::write_file(run.at("units/calls.txt"), cu, run.fp);
}

std::vector<units::UnitSequence> split_units(const Run& run, const std::string& split) {
  const auto windows = run.windows();
  const auto wu = read_units(run.at("units/windows.txt"), run.fp);
  require(wu.size() == windows.size(), Errc::format_error, "window units do not match windows");
  std::vector<units::UnitSequence> out;
  for (std::size_t i = 0; i < windows.size(); ++i)
    if (windows[i].split == split && !wu[i].empty()) out.push_back(wu[i]);
  return out;
}

void stage_ulm(const Run& run) {
  const auto train = split_units(run, "train");
  require(!train.empty(), Errc::insufficient_data, "no training unit sequences");
  const int k = run.cfg.quantizer.kmeans.k;
  auto lm = ulm::NGramLM::train(train, k, run.cfg.ngram);
  lm.fingerprint = run.fp;
  lm.save(run.at("models/ngram.json"));
  if (run.cfg.attn.enabled) {
    ulm::AttnLM model(run.cfg.attn.model);
    model.fingerprint = run.fp;
    const auto trace = ulm::attn_train(model, train, run.cfg.attn.train);
    model.save(run.at("models/attn.json"));
    write_json(run.at("models/attn_loss.json"), {{"fingerprint", run.fp}, {"loss", trace}});
  }
}

void stage_bench(const Run& run) {
  const auto m = run.manifest();
  const auto windows = run.windows();
  const auto calls = run.calls();
  const auto wu = read_units(run.at("units/windows.txt"), run.fp);
  const auto cu = read_units(run.at("units/calls.txt"), run.fp);
  auto cb = quant::load(run.at("models/codebook.json"));
  check_fp(cb.fingerprint, run.fp, run.at("models/codebook.json"));
  const std::string& split = run.cfg.corpus.eval_split;
  const bool dedup = run.cfg.quantizer.dedup;
  const std::uint64_t root = sub_seed(run.cfg.seed, "bench");

  std::vector<std::size_t> eval;
  for (std::size_t i = 0; i < windows.size(); ++i)
    if (windows[i].split == split) eval.push_back(i);
  std::vector<std::size_t> concat_ok;
  for (std::size_t i : eval)
    if (windows[i].calls.size() >= 2 && windows[i].calls.size() % 2 == 0) concat_ok.push_back(i);

  auto window_audio = [&](std::size_t i) {
    return slice(wav::read_16k(m.records[windows[i].record].path), windows[i].start_s,
                 windows[i].end_s);
  };
  auto encode_audio = [&](const dsp::Waveform& w) {
    return encode_units(featurize(w, cb.feature_kind), cb, dedup);
  };

  // Slots per eval window: shuffle, reversal, concat.
  std::vector<std::vector<bench::BenchmarkPair>> slots(eval.size());
  parallel_for(eval.size(), run.opts.jobs, [&](std::size_t e) {
    const std::size_t i = eval[e];
    const auto& w = windows[i];
    const auto audio = window_audio(i);
    seg::SegmentWindow sw{w.start_s, w.end_s, w.calls};
    auto base = [&](bench::Task task, std::uint64_t seed) {
      bench::BenchmarkPair p;
      p.task = task;
      p.seed = seed;
      p.positive = {w.id, wu[i]};
      p.distractor.ref = w.id + "#" + bench::to_string(task);
      p.provenance = {{"window", w.id}, {"fingerprint", run.fp}};
      return p;
    };
    if (w.calls.size() >= 2) {
      const std::uint64_t seed = Rng::mix(root ^ fnv1a64("shuffle." + w.id));
      auto p = base(bench::Task::shuffle, seed);
      const auto sh = bench::make_shuffle(sw, audio, seed);
      p.distractor.units = encode_audio(sh.audio);
      p.provenance["order"] = sh.order;
      slots[e].push_back(std::move(p));
    }
    {
      auto p = base(bench::Task::reversal, 0);
      p.distractor.units = encode_audio(bench::make_reversal(audio));
      slots[e].push_back(std::move(p));
    }
    const auto it = std::find(concat_ok.begin(), concat_ok.end(), i);
    if (concat_ok.size() >= 2 && it != concat_ok.end()) {
      const std::size_t pos = static_cast<std::size_t>(it - concat_ok.begin());
      const std::size_t j = concat_ok[(pos + 1) % concat_ok.size()];
      seg::SegmentWindow sb{windows[j].start_s, windows[j].end_s, windows[j].calls};
      auto p = base(bench::Task::concat, 0);
      const auto cat = bench::make_concat(sw, audio, sb, window_audio(j));
      p.distractor.ref = w.id + "+" + windows[j].id;
      p.distractor.units = encode_audio(cat.audio);
      p.provenance["partner"] = windows[j].id;
      slots[e].push_back(std::move(p));
    }
  });

  std::vector<bench::BenchmarkPair> pairs;
  for (auto& s : slots)
    for (auto& p : s) pairs.push_back(std::move(p));

  // Phee dialogue pairs from consecutive turns of the eval records.
  std::vector<bench::PheeRecord> records;
  std::map<std::string, units::UnitSequence> call_units;
  for (std::size_t c = 0; c < calls.size(); ++c) {
    call_units[calls[c].id] = cu[c];
    if (c + 1 >= calls.size() || calls[c].split != split) continue;
    const auto& a = calls[c];
    const auto& b = calls[c + 1];
    if (a.record != b.record || a.animal == b.animal || a.animal < 0 || b.animal < 0) continue;
    const double gap = b.onset_s - a.offset_s;
    if (gap < 0.0 || gap > seg::kMaxWindowSeconds) continue;
    records.push_back({animal_name(a.animal), animal_name(b.animal), a.id, b.id, gap});
  }
  json skipped = json::array();
  for (bench::Task mode : {bench::Task::caller_change, bench::Task::receiver_change}) {
    auto res = bench::make_phee_pairs(records, mode,
                                      Rng::mix(root ^ fnv1a64(bench::to_string(mode))),
                                      run.cfg.bench.phee_augment);
    bench::attach_phee_units(res.pairs, call_units);
    for (auto& p : res.pairs) {
      p.provenance["fingerprint"] = run.fp;
      pairs.push_back(std::move(p));
    }
    for (const auto& s : res.skipped)
      skipped.push_back({{"task", bench::to_string(mode)},
                         {"call_ref", records[s.record].call_ref},
                         {"reason", s.reason}});
  }
  fs::create_directories(run.at("bench"));
  bench::write_records(run.at("bench/phee_records.jsonl"), records);
  bench::write_pairs(run.at("bench/pairs.jsonl"), pairs);
  write_json(run.at("bench/skipped.json"), {{"fingerprint", run.fp}, {"skipped", skipped}});
}

json task_table(const bench::EvalResult& r) {
  json t = json::object();
  for (const char* task : kTasks) {
    auto it = r.per_task.find(task);
    if (it == r.per_task.end() || it->second.total == 0)
      t[task] = {{"accuracy", nullptr}, {"n", 0}};
    else
      t[task] = {{"accuracy", it->second.accuracy()}, {"n", it->second.total}};
  }
  return t;
}

json gaussian_fad(const metrics::GaussianStats& ref, const std::vector<dsp::PooledEmbedding>& e) {
  if (e.size() < 2) return nullptr;
  return metrics::fad(ref, metrics::fit_gaussian(e));
}

void stage_eval(const Run& run) {
  const auto m = run.manifest();
  const auto windows = run.windows();
  const auto calls = run.calls();
  const auto wu = read_units(run.at("units/windows.txt"), run.fp);
  const auto cu = read_units(run.at("units/calls.txt"), run.fp);
  auto cb = quant::load(run.at("models/codebook.json"));
  check_fp(cb.fingerprint, run.fp, run.at("models/codebook.json"));
  auto lm = ulm::NGramLM::load(run.at("models/ngram.json"));
  check_fp(lm.fingerprint, run.fp, run.at("models/ngram.json"));
  auto pairs = bench::read_pairs(run.at("bench/pairs.jsonl"));
  for (const auto& p : pairs)
    check_fp(p.provenance.value("fingerprint", std::string()), run.fp, run.at("bench/pairs.jsonl"));
  const std::string& split = run.cfg.corpus.eval_split;
  const auto eval_units = split_units(run, split);

  json report{{"tool", kToolName},
              {"version", kToolVersion},
              {"config_fingerprint", run.fp},
              {"status", "complete"},
              {"eval_split", split}};
  const json seg_summary = fp_json(run.at("segments/summary.json"), run.fp);
  report["segmentation"] = {{"precision", seg_summary.at("precision")},
                            {"recall", seg_summary.at("recall")},
                            {"windows", seg_summary.at("windows")},
                            {"calls_detected", seg_summary.at("predicted")},
                            {"calls_true", seg_summary.at("truth")}};

  auto eval_model = [&](const ulm::SequenceScorer& model, const ulm::ContextPolicy& cp) {
    json row = json::object();
    row["tasks"] = pairs.empty() ? task_table({}) : task_table(bench::pairwise_eval(model, pairs, cp));
    row["ppl"] = eval_units.empty() ? json(nullptr) : json(ulm::ppl(model, eval_units, cp));
    return row;
  };
  const json base = eval_model(lm, {});
  report["tasks"] = base.at("tasks");
  report["ppl"] = base.at("ppl");
  report["pairs"] = pairs.size();

  std::optional<ulm::AttnLM> attn;
  if (run.cfg.attn.enabled) {
    attn.emplace(ulm::AttnLM::load(run.at("models/attn.json")));
    check_fp(attn->fingerprint, run.fp, run.at("models/attn.json"));
    json a = eval_model(*attn, {});
    a["parameters"] = attn->parameter_count();
    const json loss = fp_json(run.at("models/attn_loss.json"), run.fp).at("loss");
    a["final_loss"] = loss.empty() ? json(nullptr) : loss.back();
    report["attn"] = a;
  }
  const ulm::SequenceScorer& grid_model =
      attn ? static_cast<const ulm::SequenceScorer&>(*attn) : lm;
  report["context_grid_backend"] = attn ? "attn" : "ngram";
  json grid = json::array();
  for (const auto& cp : run.cfg.context_grid.policies()) {
    json row = eval_model(grid_model, cp);
    row["context"] = cp.unlimited() ? json("full") : json(cp.window);
    row["keep_first"] = cp.keep_first;
    grid.push_back(row);
  }
  report["context_grid"] = grid;

  // FAD: training windows as reference against manipulated eval windows.
  std::vector<dsp::PooledEmbedding> ref, orig, rev, noise, roundtrip;
  std::map<std::size_t, dsp::Waveform> audio_cache;
  auto audio_of = [&](std::size_t rec) -> const dsp::Waveform& {
    auto it = audio_cache.find(rec);
    if (it == audio_cache.end()) it = audio_cache.emplace(rec, wav::read_16k(m.records[rec].path)).first;
    return it->second;
  };
  const bool can_roundtrip =
      cb.feature_kind == dsp::FeatureKind::linear_fb && !run.cfg.quantizer.dedup;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    if (w.split != "train" && w.split != split) continue;
    const auto audio = slice(audio_of(w.record), w.start_s, w.end_s);
    if (w.split == "train") {
      ref.push_back(metrics::fad_embedding(audio));
      if (split != "train") continue;
    }
    orig.push_back(metrics::fad_embedding(audio));
    rev.push_back(metrics::fad_embedding(bench::make_reversal(audio)));
    double rms = 0.0;
    for (double x : audio.samples) rms += x * x;
    rms = std::sqrt(rms / std::max<std::size_t>(1, audio.samples.size()));
    Rng rng = Rng::derive(run.cfg.seed, "metrics.noise." + w.id);
    dsp::Waveform n = audio;
    for (double& x : n.samples) x = rms * rng.normal();
    noise.push_back(metrics::fad_embedding(n));
    if (can_roundtrip && wu[i].size() >= 2)
      roundtrip.push_back(
          dsp::pool_stats(dsp::with_rising_flux(quant::reconstruct(wu[i], cb))));
  }
  json fad{{"embedding", "pool_stats(linear_fb 5-8 kHz + rising flux)"},
           {"n_ref", ref.size()},
           {"n_cand", orig.size()}};
  if (ref.size() >= 2) {
    const auto g = metrics::fit_gaussian(ref);
    fad["original"] = gaussian_fad(g, orig);
    fad["unit_roundtrip"] = can_roundtrip ? gaussian_fad(g, roundtrip) : json(nullptr);
    fad["reversed"] = gaussian_fad(g, rev);
    fad["noise"] = gaussian_fad(g, noise);
  } else {
    for (const char* key : {"original", "unit_roundtrip", "reversed", "noise"}) fad[key] = nullptr;
  }
  report["fad"] = fad;

  // Purity of eval calls against call types, and the caller-identity probe.
  int types = 0;
  for (const auto& c : calls) types = std::max(types, c.type + 1);
  json purity = {{"frame", nullptr}, {"call", nullptr}, {"n_calls", 0}};
  if (types > 0) {
    const int k = cb.k();
    metrics::Contingency frames = metrics::Contingency::zeros(k, types);
    std::vector<units::UnitSequence> call_seqs;
    std::vector<int> call_labels;
    for (std::size_t c = 0; c < calls.size(); ++c) {
      if (calls[c].split != split || calls[c].type < 0 || cu[c].empty()) continue;
      for (int u : cu[c]) frames.add(u, calls[c].type);
      call_seqs.push_back(cu[c]);
      call_labels.push_back(calls[c].type);
    }
    if (!call_seqs.empty()) {
      const auto pf = metrics::purity(frames);
      const auto pc = metrics::purity(metrics::call_contingency(call_seqs, call_labels, k, types));
      purity = {{"frame", {{"unit", pf.unit}, {"label", pf.label}}},
                {"call", {{"unit", pc.unit}, {"label", pc.label}}},
                {"n_calls", call_seqs.size()}};
    }
  }
  report["purity"] = purity;

  json probe = {{"target", "caller_id"}, {"recall", nullptr}, {"precision", nullptr},
                {"f1", nullptr}, {"n", 0}};
  {
    std::vector<dsp::PooledEmbedding> emb;
    std::vector<int> labels;
    for (const auto& c : calls) {
      if (c.animal < 0) continue;
      const auto f = read_features(run.at("features/calls/" + c.id + ".csv"), run.fp);
      if (f.frames() < 2) continue;
      emb.push_back(dsp::pool_stats(f));
      labels.push_back(c.animal);
    }
    std::vector<int> distinct = labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() >= 2 && emb.size() >= 4 * distinct.size()) {
      // Labels are re-indexed densely so absent animals do not create empty classes.
      for (int& l : labels)
        l = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), l) -
                             distinct.begin());
      Matrix x(static_cast<Eigen::Index>(emb.size()), emb.front().size());
      for (std::size_t i = 0; i < emb.size(); ++i) x.row(i) = emb[i].transpose();
      const auto pm = ulm::probe_experiment(x, labels, run.cfg.probe);
      probe = {{"target", "caller_id"}, {"recall", pm.recall}, {"precision", pm.precision},
               {"f1", pm.f1}, {"n", pm.n}};
    }
  }
  report["probe"] = probe;

  validate_report(report);
  write_json(run.at("report.json"), report);
}

void run_one(const std::string& stage, const Run& run) {
  if (stage == "synth") stage_synth(run);
  else if (stage == "segment") stage_segment(run);
  else if (stage == "features") stage_features(run);
  else if (stage == "quantize") stage_quantize(run);
  else if (stage == "ulm") stage_ulm(run);
  else if (stage == "bench") stage_bench(run);
  else if (stage == "eval") stage_eval(run);
  else throw Error(Errc::invalid_argument, "unknown stage '" + stage + "'");
}

fs::path marker(const Run& run, const std::string& stage) {
  return run.at("stages/" + stage + ".json");
}

// Claims the run directory for this config, rejecting foreign artifacts.
void claim(const Run& run) {
  fs::create_directories(run.opts.out_dir);
  const fs::path cfg_path = run.at("config.json");
  if (fs::exists(cfg_path)) {
    check_fp(read_json(cfg_path).value("fingerprint", std::string()), run.fp, cfg_path);
  } else {
    write_json(cfg_path, {{"fingerprint", run.fp}, {"config", run.cfg.to_json()}});
  }
  for (const char* stage : kStages) {
    const fs::path p = marker(run, stage);
    if (fs::exists(p)) fp_json(p, run.fp);
  }
}

void write_partial(const Run& run, const std::string& stage, const std::string& what) {
  json report{{"tool", kToolName},
              {"version", kToolVersion},
              {"config_fingerprint", run.fp},
              {"status", "partial"},
              {"failed_stage", stage},
              {"diagnostics", what}};
  validate_report(report);
  write_json(run.at("report.json"), report);
}

void run_checked(const std::string& stage, const Run& run) {
  try {
    run_one(stage, run);
  } catch (const std::exception& e) {
    write_partial(run, stage, e.what());
    throw StageFailure(stage, e.what());
  }
  write_json(marker(run, stage), {{"stage", stage}, {"fingerprint", run.fp}});
}

}  // namespace

std::string animal_name(int animal) { return "A" + std::to_string(animal); }

std::vector<SynthScene> make_synthetic_corpus(const SynthCorpusConfig& cfg, std::uint64_t seed) {
  struct TypeShape {
    double dur_lo, dur_hi, f0_offset, sweep, fm_depth, fm_rate;
  };
  static constexpr TypeShape kTypes[4] = {
      {0.8, 1.5, 0.0, 0.0, 80.0, 1.5},        // flat, long
      {0.3, 0.6, -600.0, 1200.0, 30.0, 4.0},  // upsweep
      {0.5, 0.9, 600.0, -1200.0, 250.0, 9.0}, // trilled downsweep
      {0.3, 0.45, 900.0, 0.0, 20.0, 2.0},     // short, high
  };
  std::vector<SynthScene> scenes;
  for (int s = 0; s < cfg.scenes; ++s) {
    Rng rng = Rng::derive(seed, "synth.scene." + std::to_string(s));
    SynthScene scene;
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03d", s);
    scene.name = name;
    const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.animals)));
    int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.animals - 1)));
    if (b >= a) ++b;
    scene.caller = a;
    scene.receiver = b;
    const int n = cfg.calls_min +
                  static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.calls_max - cfg.calls_min + 1)));
    synth::SceneSpec spec;
    spec.noise_floor_db = cfg.noise_floor_db;
    spec.seed = rng.next_u64();
    int type = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.call_types)));
    double t = rng.uniform(0.5, 1.0);
    for (int c = 0; c < n; ++c) {
      const int animal = c % 2 == 0 ? a : b;
      const TypeShape& shape = kTypes[type];
      const double base = 6200.0 + 2000.0 * animal / std::max(1, cfg.animals - 1);
      synth::CallSpec call;
      call.duration_s = rng.uniform(shape.dur_lo, shape.dur_hi);
      call.f0_hz = base + shape.f0_offset;
      call.sweep_hz = shape.sweep;
      call.fm_depth_hz = shape.fm_depth;
      call.fm_rate_hz = shape.fm_rate;
      call.amplitude = rng.uniform(0.3, 0.8);
      call.attack_s = 0.01;
      call.decay_s = 0.06;
      spec.calls.push_back({t, call});
      scene.calls.push_back({t, t + call.duration_s, animal, type});
      t += call.duration_s + rng.uniform(cfg.gap_min_s, cfg.gap_max_s);
      type = rng.uniform() < cfg.type_cycle_prob
                 ? (type + 1) % cfg.call_types
                 : static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.call_types)));
    }
    spec.total_s = scene.calls.back().offset_s + 1.0;
    scene.audio = synth::synth_scene(spec).audio;
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

dsp::FeatureMatrix featurize(const dsp::Waveform& w, dsp::FeatureKind kind) {
  return kind == dsp::FeatureKind::mfcc ? dsp::mfcc(w) : dsp::linear_fb(w);
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

nlohmann::json pipeline_run(const RunConfig& cfg, const RunOptions& opts) {
  Run run{cfg, opts, cfg.fingerprint()};
  claim(run);
  for (const char* stage : kStages) {
    if (fs::exists(marker(run, stage))) continue;
    run_checked(stage, run);
  }
  return read_json(run.at("report.json"));
}

void run_stage(const std::string& stage, const RunConfig& cfg, const RunOptions& opts) {
  Run run{cfg, opts, cfg.fingerprint()};
  const auto it = std::find_if(kStages.begin(), kStages.end(),
                               [&](const char* s) { return stage == s; });
  require(it != kStages.end(), Errc::invalid_argument, "unknown stage '" + stage + "'");
  claim(run);
  for (auto prev = kStages.begin(); prev != it; ++prev)
    require(fs::exists(marker(run, *prev)), Errc::invalid_argument,
            std::string("stage ") + *prev + " has not completed in " + opts.out_dir.string());
  run_checked(stage, run);
}

void validate_report(const nlohmann::json& r) {
  auto need = [&r](const char* key, bool ok) {
    require(r.contains(key) && ok, Errc::format_error, std::string("report field '") + key +
                                                           "' is missing or malformed");
  };
  need("tool", r.contains("tool") && r["tool"].is_string());
  need("version", r.contains("version") && r["version"].is_string());
  need("config_fingerprint", r.contains("config_fingerprint") && r["config_fingerprint"].is_string());
  need("status", r.contains("status") && r["status"].is_string());
  const std::string status = r.at("status").get<std::string>();
  require(status == "complete" || status == "partial", Errc::format_error,
          "report status must be complete or partial");
  if (status == "partial") {
    need("failed_stage", r.contains("failed_stage") && r["failed_stage"].is_string());
    need("diagnostics", r.contains("diagnostics") && r["diagnostics"].is_string());
    return;
  }
  auto check_tasks = [](const json& t) {
    require(t.is_object(), Errc::format_error, "task table must be an object");
    for (const char* task : kTasks) {
      require(t.contains(task) && t.at(task).contains("accuracy") && t.at(task).contains("n") &&
                  (t.at(task).at("accuracy").is_number() || t.at(task).at("accuracy").is_null()) &&
                  t.at(task).at("n").is_number_integer(),
              Errc::format_error, std::string("task entry '") + task + "' is malformed");
    }
  };
  need("tasks", r.contains("tasks"));
  check_tasks(r.at("tasks"));
  need("ppl", r.contains("ppl") && (r["ppl"].is_number() || r["ppl"].is_null()));
  need("context_grid", r.contains("context_grid") && r["context_grid"].is_array());
  for (const auto& row : r.at("context_grid")) {
    require(row.contains("context") && row.contains("keep_first") && row.contains("ppl"),
            Errc::format_error, "context grid row is malformed");
    check_tasks(row.at("tasks"));
  }
  for (const char* key : {"segmentation", "fad", "purity", "probe"})
    need(key, r.contains(key) && r[key].is_object());
}

namespace {

std::string cell(const json& v) {
  if (v.is_null()) return "-";
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v.get<double>());
    return buf;
  }
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::string render_report(const nlohmann::json& r) {
  validate_report(r);
  std::ostringstream os;
  os << r.at("tool").get<std::string>() << " " << r.at("version").get<std::string>()
     << "  config " << r.at("config_fingerprint").get<std::string>() << "  status "
     << r.at("status").get<std::string>() << "\n";
  if (r.at("status") == "partial") {
    os << "failed stage: " << r.at("failed_stage").get<std::string>() << "\n"
       << r.at("diagnostics").get<std::string>() << "\n";
    return os.str();
  }
  const auto& s = r.at("segmentation");
  os << "\nsegmentation  precision " << cell(s.at("precision")) << "  recall "
     << cell(s.at("recall")) << "  windows " << cell(s.at("windows")) << "\n";
  os << "\n| model | shuffle | concat | reversal | caller_change | receiver_change | ppl |\n"
     << "|---|---|---|---|---|---|---|\n";
  auto row = [&os](const std::string& name, const json& tasks, const json& ppl) {
    os << "| " << name;
    for (const char* task : kTasks)
      os << " | " << cell(tasks.at(task).at("accuracy")) << " (n=" << cell(tasks.at(task).at("n"))
         << ")";
    os << " | " << cell(ppl) << " |\n";
  };
  row("ngram", r.at("tasks"), r.at("ppl"));
  if (r.contains("attn")) row("attn", r.at("attn").at("tasks"), r.at("attn").at("ppl"));
  os << "\ncontext grid (" << cell(r.value("context_grid_backend", json("ngram"))) << ")\n"
     << "| context | keep_first | shuffle | concat | reversal | caller_change | receiver_change | "
        "ppl |\n|---|---|---|---|---|---|---|---|\n";
  for (const auto& g : r.at("context_grid")) {
    os << "| " << cell(g.at("context")) << " | " << cell(g.at("keep_first"));
    for (const char* task : kTasks) os << " | " << cell(g.at("tasks").at(task).at("accuracy"));
    os << " | " << cell(g.at("ppl")) << " |\n";
  }
  const auto& f = r.at("fad");
  os << "\nFAD  original " << cell(f.value("original", json())) << "  unit_roundtrip "
     << cell(f.value("unit_roundtrip", json())) << "  reversed "
     << cell(f.value("reversed", json())) << "  noise " << cell(f.value("noise", json())) << "\n";
  const auto& p = r.at("purity");
  if (!p.at("frame").is_null())
    os << "purity  frame unit " << cell(p["frame"]["unit"]) << " label "
       << cell(p["frame"]["label"]) << "  call unit " << cell(p["call"]["unit"]) << " label "
       << cell(p["call"]["label"]) << "\n";
  const auto& pr = r.at("probe");
  os << "probe (" << cell(pr.at("target")) << ")  recall " << cell(pr.at("recall"))
     << "  precision " << cell(pr.at("precision")) << "  F1 " << cell(pr.at("f1")) << "\n";
  return os.str();
}

}  // namespace gmslm::pipeline
