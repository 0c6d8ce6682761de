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


// gmslm command-line tool.
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 stage or
// processing failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gmslm/attn.hpp"
#include "gmslm/bench.hpp"
#include "gmslm/config.hpp"
#include "gmslm/generate.hpp"
#include "gmslm/manifest.hpp"
#include "gmslm/metrics.hpp"
#include "gmslm/ngram.hpp"
#include "gmslm/pipeline.hpp"
#include "gmslm/probe.hpp"
#include "gmslm/quantizer.hpp"
#include "gmslm/segmenter.hpp"
#include "gmslm/synthlab.hpp"
#include "gmslm/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gmslm;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitFailure = 3;

struct Globals {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir = ".";
  int jobs = 1;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::invalid_argument, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_argument, path + ": " + e.what());
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(out);
  require(static_cast<bool>(f), Errc::io_error, "cannot write " + out);
  f << j.dump(2) << "\n";
}

fs::path under(const Globals& g, const std::string& path) {
  const fs::path p(path);
  return p.is_absolute() ? p : fs::path(g.out_dir) / p;
}

std::vector<units::UnitSequence> read_unit_files(const std::vector<std::string>& files) {
  std::vector<units::UnitSequence> all;
  for (const auto& f : files) {
    auto seqs = units::read_file(f);
    all.insert(all.end(), seqs.begin(), seqs.end());
  }
  return all;
}

// A loaded language model of either backend.
struct AnyModel {
  std::optional<ulm::NGramLM> ngram;
  std::optional<ulm::AttnLM> attn;
  const ulm::LanguageModel& get() const {
    return ngram ? static_cast<const ulm::LanguageModel&>(*ngram) : *attn;
  }
  std::string fingerprint() const { return ngram ? ngram->fingerprint : attn->fingerprint; }
};

AnyModel load_model(const std::string& path) {
  const json j = read_json_file(path);
  AnyModel m;
  const std::string format = j.value("format", std::string());
  if (format == "gmslm.ngram") m.ngram = ulm::NGramLM::from_json(j);
  else if (format == "gmslm.attn") m.attn = ulm::AttnLM::from_json(j);
  else throw Error(Errc::invalid_argument, path + " is not a gmslm language model");
  return m;
}

struct CtxFlags {
  int ctx = ulm::ContextPolicy::kUnlimited;
  int keep_first = 0;
  void add(CLI::App* app) {
    app->add_option("--ctx", ctx, "context window in tokens (-1 = unlimited)");
    app->add_option("--keep-first", keep_first, "always keep the first N tokens")
        ->check(CLI::IsMember({0, 1, 5}));
  }
  ulm::ContextPolicy policy() const {
    ulm::ContextPolicy cp{ctx, keep_first};
    cp.validate();
    return cp;
  }
};

std::vector<seg::CallSegment> read_calls(const std::string& path) {
  const json j = read_json_file(path);
  std::vector<seg::CallSegment> calls;
  for (const auto& c : j.at("calls")) calls.push_back({c.at(0), c.at(1)});
  return calls;
}

dsp::Waveform scene_or_window(const std::string& wav_path) { return wav::read_16k(wav_path); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gmslm: textless language modeling of synthetic and recorded animal calls"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "root seed")->each([&g](const std::string&) { g.seed_set = true; });
  app.add_option("--out-dir", g.out_dir, "output directory");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic audio or unit corpora");
  std::string scene_spec, chain_file, synth_out, truth_out, synth_config;
  int n_seqs = 100, seq_len = 50;
  synth->add_option("--scene", scene_spec, "scene spec JSON; writes a WAV");
  synth->add_option("--chain", chain_file, "Markov chain JSON; writes a unit corpus");
  synth->add_option("--config", synth_config, "run config; writes the corpus into --out-dir");
  synth->add_option("--sequences", n_seqs, "sequences to sample from --chain");
  synth->add_option("--length", seq_len, "length of each sampled sequence");
  synth->add_option("--out", synth_out, "output file");
  synth->add_option("--truth", truth_out, "write true call boundaries (JSON) here");

  // segment
  auto* segment = app.add_subcommand("segment", "detect calls and pack 10 s windows");
  std::string seg_in, seg_params, seg_out;
  segment->add_option("--in", seg_in, "input WAV")->required();
  segment->add_option("--params", seg_params, "detector parameters JSON");
  segment->add_option("--out", seg_out, "output JSON (stdout if omitted)");

  // features
  auto* features = app.add_subcommand("features", "extract frame features");
  std::string feat_in, feat_out, feat_kind = "mfcc";
  bool feat_pooled = false;
  features->add_option("--in", feat_in, "input WAV")->required();
  features->add_option("--kind", feat_kind, "mfcc | linear_fb");
  features->add_option("--out", feat_out, "output CSV (stdout if omitted)");
  features->add_flag("--pooled", feat_pooled, "emit the pooled mean+variance embedding");

  // quantize
  auto* quantize = app.add_subcommand("quantize", "fit a codebook or encode features");
  quantize->require_subcommand(1);
  auto* qfit = quantize->add_subcommand("fit", "mini-batch k-means codebook");
  std::vector<std::string> q_features;
  std::string q_out, q_codebook;
  quant::KMeansOptions kopts;
  bool q_dedup = false;
  qfit->add_option("--features", q_features, "feature CSV files")->required();
  qfit->add_option("-k,--k", kopts.k, "codebook size");
  qfit->add_option("--restarts", kopts.restarts, "k-means++ restarts");
  qfit->add_option("--minibatch", kopts.minibatch, "mini-batch size");
  qfit->add_option("--out", q_out, "codebook JSON")->required();
  auto* qenc = quantize->add_subcommand("encode", "frames to unit sequences");
  qenc->add_option("--codebook", q_codebook, "codebook JSON")->required();
  qenc->add_option("--features", q_features, "feature CSV files")->required();
  qenc->add_option("--out", q_out, "units text file (stdout if omitted)");
  qenc->add_flag("--dedup", q_dedup, "collapse runs of repeated units");

  // ulm
  auto* ulm_cmd = app.add_subcommand("ulm", "unit language models");
  ulm_cmd->require_subcommand(1);
  std::vector<std::string> u_units;
  std::string u_model, u_out, u_backend = "ngram", u_smoothing = "kneser_ney", u_prompt;
  int u_k = 0;
  ulm::NGramOptions nopts;
  ulm::AttnConfig acfg;
  ulm::TrainOptions topts;
  CtxFlags ctx;
  ulm::GenerateOptions gopts;
  auto* utrain = ulm_cmd->add_subcommand("train", "train a model on unit files");
  utrain->add_option("--units", u_units, "unit text files")->required();
  utrain->add_option("-K,--vocab", u_k, "number of unit tokens")->required();
  utrain->add_option("--backend", u_backend, "ngram | attn");
  utrain->add_option("--order", nopts.order, "n-gram order");
  utrain->add_option("--smoothing", u_smoothing, "add_k | kneser_ney");
  utrain->add_option("--add-k", nopts.add_k, "add-k pseudo count");
  utrain->add_option("--discount", nopts.discount, "Kneser-Ney discount");
  utrain->add_option("--layers", acfg.layers);
  utrain->add_option("--heads", acfg.heads);
  utrain->add_option("--embed", acfg.embed);
  utrain->add_option("--ffn", acfg.ffn);
  utrain->add_option("--steps", topts.steps);
  utrain->add_option("--lr", topts.lr);
  utrain->add_option("--batch", topts.batch);
  utrain->add_option("--out", u_out, "model JSON")->required();
  auto* uscore = ulm_cmd->add_subcommand("score", "log-probability of each sequence");
  auto* uppl = ulm_cmd->add_subcommand("ppl", "corpus perplexity");
  for (auto* sc : {uscore, uppl}) {
    sc->add_option("--model", u_model, "model JSON")->required();
    sc->add_option("--units", u_units, "unit text files")->required();
    ctx.add(sc);
  }
  auto* ugen = ulm_cmd->add_subcommand("generate", "beam-search continuation");
  ugen->add_option("--model", u_model, "model JSON")->required();
  ugen->add_option("--prompt", u_prompt, "space-separated prompt tokens");
  ugen->add_option("--beam", gopts.beam, "beam size");
  ugen->add_option("--temperature", gopts.temperature, "softmax temperature");
  ugen->add_option("--max-len", gopts.max_len, "maximum output length, prompt included");
  ugen->add_flag("--greedy", gopts.greedy, "argmax decoding");
  ugen->add_flag("--sample", gopts.sample, "stochastic beam (seeded)");
  ctx.add(ugen);
  auto* uprobe = ulm_cmd->add_subcommand("probe", "train and evaluate the probe classifier");
  std::string p_emb, p_labels;
  ulm::ProbeOptions popts;
  uprobe->add_option("--embeddings", p_emb, "CSV, one embedding per row")->required();
  uprobe->add_option("--labels", p_labels, "one integer label per line")->required();
  uprobe->add_option("--epochs", popts.epochs);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "benchmark construction and evaluation");
  bench_cmd->require_subcommand(1);
  std::string b_in, b_calls, b_out, b_a, b_a_calls, b_b, b_b_calls, b_records, b_mode,
      b_pairs, b_model;
  int b_augment = 1;
  auto* bshuf = bench_cmd->add_subcommand("shuffle", "reorder the calls of a window");
  bshuf->add_option("--in", b_in, "window WAV")->required();
  bshuf->add_option("--calls", b_calls, "calls JSON (as written by segment)")->required();
  bshuf->add_option("--out", b_out, "distractor WAV")->required();
  auto* brev = bench_cmd->add_subcommand("reversal", "time-reverse a window");
  brev->add_option("--in", b_in, "window WAV")->required();
  brev->add_option("--out", b_out, "distractor WAV")->required();
  auto* bcat = bench_cmd->add_subcommand("concat", "first half of a, second half of b");
  bcat->add_option("--a", b_a)->required();
  bcat->add_option("--a-calls", b_a_calls)->required();
  bcat->add_option("--b", b_b)->required();
  bcat->add_option("--b-calls", b_b_calls)->required();
  bcat->add_option("--out", b_out, "distractor WAV")->required();
  auto* bphee = bench_cmd->add_subcommand("phee", "caller/receiver change pairs");
  bphee->add_option("--records", b_records, "phee records JSONL")->required();
  bphee->add_option("--mode", b_mode, "caller_change | receiver_change")->required();
  bphee->add_option("--augment", b_augment, "pairs per record");
  bphee->add_option("--out", b_out, "pairs JSONL")->required();
  auto* beval = bench_cmd->add_subcommand("eval", "pairwise accuracy of a model");
  beval->add_option("--model", b_model, "model JSON")->required();
  beval->add_option("--pairs", b_pairs, "pairs JSONL with units")->required();
  ctx.add(beval);

  // metrics
  auto* metrics_cmd = app.add_subcommand("metrics", "corpus metrics");
  metrics_cmd->require_subcommand(1);
  std::string m_ref, m_cand, m_units, m_labels, m_fp;
  int m_k = 0;
  auto* mfad = metrics_cmd->add_subcommand("fad", "Frechet audio distance");
  mfad->add_option("--ref", m_ref, "reference manifest JSONL")->required();
  mfad->add_option("--cand", m_cand, "candidate manifest JSONL")->required();
  auto* mpur = metrics_cmd->add_subcommand("purity", "unit and label purity");
  mpur->add_option("--units", m_units, "units text file")->required();
  mpur->add_option("--labels", m_labels, "labels: one per line or one per token")->required();
  mpur->add_option("-k,--k", m_k, "number of units (default: max + 1)");
  for (auto* sc : {mfad, mpur}) sc->add_option("--fingerprint", m_fp, "config fingerprint");

  // pipeline / report
  auto* pipe = app.add_subcommand("pipeline", "run the end-to-end pipeline");
  std::string config_path, only_stage;
  pipe->add_option("--config", config_path, "run config JSON (defaults if omitted)");
  pipe->add_option("--stage", only_stage, "run a single stage");
  auto* report = app.add_subcommand("report", "print a run report");
  std::string report_path;
  bool report_json = false;
  report->add_option("--report", report_path, "report JSON (default: <out-dir>/report.json)");
  report->add_flag("--json", report_json, "print the validated JSON instead of tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*synth) {
      if (!synth_config.empty()) {
        auto cfg = pipeline::load_config(synth_config);
        if (g.seed_set) cfg.seed = g.seed;
        pipeline::run_stage("synth", cfg, {g.out_dir, g.jobs});
      } else if (!scene_spec.empty()) {
        auto spec = read_json_file(scene_spec).get<synth::SceneSpec>();
        if (g.seed_set) spec.seed = g.seed;
        require(!synth_out.empty(), Errc::invalid_argument, "--out is required");
        const auto scene = synth::synth_scene(spec);
        wav::write(under(g, synth_out), scene.audio);
        if (!truth_out.empty()) {
          json calls = json::array();
          for (const auto& c : scene.truth) calls.push_back({c.onset_s, c.offset_s});
          emit({{"calls", calls}}, under(g, truth_out).string());
        }
      } else if (!chain_file.empty()) {
        const auto chain = read_json_file(chain_file).get<synth::MarkovChain>();
        const auto corpus = synth::markov_corpus(chain, n_seqs, seq_len, g.seed);
        require(!synth_out.empty(), Errc::invalid_argument, "--out is required");
        units::write_file(under(g, synth_out), corpus);
        json info{{"chain_ppl", synth::chain_ppl(chain)}, {"sequences", n_seqs},
                  {"length", seq_len}};
        std::cout << info.dump() << "\n";
      } else {
        throw Error(Errc::invalid_argument, "synth needs --scene, --chain or --config");
      }
    } else if (*segment) {
      seg::DetectorParams p;
      if (!seg_params.empty()) p = read_json_file(seg_params).get<seg::DetectorParams>();
      p.validate();
      const auto audio = scene_or_window(seg_in);
      const auto calls = seg::detect_calls(audio, p);
      json jc = json::array(), jw = json::array();
      for (const auto& c : calls) jc.push_back({c.onset_s, c.offset_s});
      for (const auto& w : seg::pack_windows(audio, calls)) {
        json wc = json::array();
        for (const auto& c : w.calls) wc.push_back({c.onset_s, c.offset_s});
        jw.push_back({{"start_s", w.start_s}, {"end_s", w.end_s}, {"calls", wc}});
      }
      emit({{"calls", jc}, {"windows", jw}}, seg_out);
    } else if (*features) {
      const auto audio = scene_or_window(feat_in);
      const auto f = pipeline::featurize(audio, dsp::parse_feature_kind(feat_kind));
      std::string text;
      if (feat_pooled) {
        const auto e = dsp::pool_stats(f);
        for (Eigen::Index i = 0; i < e.size(); ++i) text += (i ? "," : "") + format_double(e[i]);
        text += "\n";
      } else {
        text = dsp::to_csv(f);
      }
      if (feat_out.empty()) std::cout << text;
      else std::ofstream(feat_out) << text;
    } else if (*quantize) {
      std::vector<dsp::FeatureMatrix> fs_;
      for (const auto& f : q_features) fs_.push_back(dsp::from_csv(slurp(f)));
      if (*qfit) {
        kopts.seed = g.seed;
        auto cb = quant::fit_codebook(fs_, kopts);
        if (!fs_.empty()) cb.feature_kind = fs_.front().kind;
        quant::save(q_out, cb);
      } else {
        const auto cb = quant::load(q_codebook);
        std::vector<units::UnitSequence> seqs;
        for (const auto& f : fs_) {
          auto u = quant::encode(f, cb);
          seqs.push_back(q_dedup ? units::collapsed(u) : u);
        }
        if (q_out.empty()) std::cout << units::to_text(seqs, cb.fingerprint);
        else units::write_file(q_out, seqs, cb.fingerprint);
      }
    } else if (*ulm_cmd) {
      if (*utrain) {
        const auto corpus = read_unit_files(u_units);
        if (u_backend == "ngram") {
          nopts.smoothing = ulm::parse_smoothing(u_smoothing);
          ulm::NGramLM::train(corpus, u_k, nopts).save(u_out);
        } else if (u_backend == "attn") {
          acfg.vocab = u_k;
          acfg.seed = g.seed;
          topts.seed = g.seed;
          ulm::AttnLM model(acfg);
          const auto trace = ulm::attn_train(model, corpus, topts);
          model.save(u_out);
          std::cout << json{{"steps", trace.size()}, {"final_loss", trace.back()},
                            {"parameters", model.parameter_count()}}
                           .dump()
                    << "\n";
        } else {
          throw Error(Errc::invalid_argument, "unknown backend '" + u_backend + "'");
        }
      } else if (*uscore || *uppl) {
        const auto model = load_model(u_model);
        const auto corpus = read_unit_files(u_units);
        const auto cp = ctx.policy();
        if (*uscore) {
          json scores = json::array();
          for (const auto& s : corpus) scores.push_back(model.get().score(s, cp));
          emit({{"context", cp.label()}, {"scores", scores}}, "");
        } else {
          std::size_t n = 0;
          for (const auto& s : corpus) n += s.size() + 1;
          emit(metrics::metric_json("ppl", ulm::ppl(model.get(), corpus, cp),
                                    static_cast<int>(n), model.fingerprint()),
               "");
        }
      } else if (*ugen) {
        const auto model = load_model(u_model);
        units::UnitSequence prompt;
        std::istringstream ps(u_prompt);
        for (int t; ps >> t;) prompt.push_back(t);
        gopts.seed = g.seed;
        gopts.context = ctx.policy();
        const auto out = ulm::generate(model.get(), prompt, gopts);
        emit({{"tokens", out.tokens}, {"log_prob", out.log_prob}, {"ended", out.ended}}, "");
      } else if (*uprobe) {
        std::vector<std::vector<double>> rows;
        std::istringstream es(slurp(p_emb));
        for (std::string line; std::getline(es, line);) {
          if (line.empty() || line[0] == '#') continue;
          std::vector<double> r;
          std::istringstream ls(line);
          for (std::string c; std::getline(ls, c, ',');) r.push_back(std::stod(c));
          rows.push_back(std::move(r));
        }
        std::vector<int> labels;
        std::istringstream lsrc(slurp(p_labels));
        for (int l; lsrc >> l;) labels.push_back(l);
        require(!rows.empty() && rows.size() == labels.size(), Errc::invalid_argument,
                "embeddings and labels must have the same number of rows");
        Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
          require(rows[i].size() == rows[0].size(), Errc::invalid_argument, "ragged embeddings");
          for (std::size_t d = 0; d < rows[i].size(); ++d) x(i, d) = rows[i][d];
        }
        popts.seed = g.seed;
        const auto m = ulm::probe_experiment(x, labels, popts);
        emit({{"recall", m.recall}, {"precision", m.precision}, {"f1", m.f1},
              {"accuracy", m.accuracy}, {"n", m.n}},
             "");
      }
    } else if (*bench_cmd) {
      if (*bshuf) {
        const auto audio = wav::read_16k(b_in);
        seg::SegmentWindow w{0.0, audio.duration_s(), read_calls(b_calls)};
        const auto out = bench::make_shuffle(w, audio, g.seed);
        wav::write(b_out, out.audio);
        emit({{"order", out.order}}, "");
      } else if (*brev) {
        wav::write(b_out, bench::make_reversal(wav::read_16k(b_in)));
      } else if (*bcat) {
        const auto a = wav::read_16k(b_a), b = wav::read_16k(b_b);
        const auto out = bench::make_concat({0.0, a.duration_s(), read_calls(b_a_calls)}, a,
                                            {0.0, b.duration_s(), read_calls(b_b_calls)}, b);
        wav::write(b_out, out.audio);
      } else if (*bphee) {
        const auto res = bench::make_phee_pairs(bench::read_records(b_records),
                                                bench::parse_task(b_mode), g.seed, b_augment);
        bench::write_pairs(b_out, res.pairs);
        json skipped = json::array();
        for (const auto& s : res.skipped)
          skipped.push_back({{"record", s.record}, {"reason", s.reason}});
        emit({{"pairs", res.pairs.size()}, {"skipped", skipped}}, "");
      } else if (*beval) {
        const auto model = load_model(b_model);
        const auto r = bench::pairwise_eval(model.get(), bench::read_pairs(b_pairs), ctx.policy());
        json tasks = json::object();
        for (const auto& [task, s] : r.per_task)
          tasks[task] = {{"accuracy", s.accuracy()}, {"n", s.total}};
        emit({{"tasks", tasks}, {"overall", {{"accuracy", r.overall.accuracy()},
                                             {"n", r.overall.total}}}},
             "");
      }
    } else if (*metrics_cmd) {
      if (*mfad) {
        auto embed = [](const std::string& path) {
          const auto m = corpus::read_manifest(path);
          std::vector<dsp::PooledEmbedding> e;
          for (const auto& r : m.records)
            e.push_back(metrics::fad_embedding(
                wav::read_16k(fs::path(path).parent_path() / r.path)));
          return e;
        };
        const auto ref = embed(m_ref), cand = embed(m_cand);
        const double v = metrics::fad(metrics::fit_gaussian(ref), metrics::fit_gaussian(cand));
        emit(metrics::metric_json("fad", v, static_cast<int>(ref.size() + cand.size()), m_fp), "");
      } else {
        const auto seqs = units::read_file(m_units);
        std::vector<std::vector<int>> labels;
        std::istringstream ls(slurp(m_labels));
        for (std::string line; std::getline(ls, line);) {
          if (line.empty() || line[0] == '#') continue;
          std::vector<int> row;
          std::istringstream rs(line);
          for (int l; rs >> l;) row.push_back(l);
          labels.push_back(std::move(row));
        }
        require(labels.size() == seqs.size(), Errc::invalid_argument,
                "labels must have one line per unit sequence");
        int k = m_k, c = 0;
        for (const auto& s : seqs)
          for (int u : s) k = std::max(k, u + 1);
        for (const auto& row : labels)
          for (int l : row) c = std::max(c, l + 1);
        auto frames = metrics::Contingency::zeros(k, std::max(c, 1));
        std::vector<int> call_labels;
        for (std::size_t i = 0; i < seqs.size(); ++i) {
          const auto& row = labels[i];
          require(row.size() == 1 || row.size() == seqs[i].size(), Errc::invalid_argument,
                  "label line " + std::to_string(i + 1) + " must hold 1 or one-per-token labels");
          for (std::size_t t = 0; t < seqs[i].size(); ++t)
            frames.add(seqs[i][t], row.size() == 1 ? row[0] : row[t]);
          call_labels.push_back(row.size() == 1 ? row[0] : row.front());
        }
        const auto pf = metrics::purity(frames);
        const auto pc =
            metrics::purity(metrics::call_contingency(seqs, call_labels, k, std::max(c, 1)));
        const int n = static_cast<int>(frames.total());
        emit(json::array({metrics::metric_json("unit_purity_frame", pf.unit, n, m_fp),
                          metrics::metric_json("label_purity_frame", pf.label, n, m_fp),
                          metrics::metric_json("unit_purity_call", pc.unit,
                                               static_cast<int>(seqs.size()), m_fp),
                          metrics::metric_json("label_purity_call", pc.label,
                                               static_cast<int>(seqs.size()), m_fp)}),
             "");
      }
    } else if (*pipe) {
      pipeline::RunConfig cfg;
      try {
        cfg = config_path.empty() ? pipeline::config_from_json(json::object())
                                  : pipeline::load_config(config_path);
        if (g.seed_set) {
          json j = cfg.to_json();
          j["seed"] = g.seed;
          cfg = pipeline::config_from_json(j);
        }
      } catch (const Error& e) {
        std::cerr << "gmslm: invalid config: " << e.what() << "\n";
        return kExitInvalid;
      }
      const pipeline::RunOptions opts{g.out_dir, g.jobs};
      if (!only_stage.empty()) {
        pipeline::run_stage(only_stage, cfg, opts);
      } else {
        const auto r = pipeline::pipeline_run(cfg, opts);
        std::cout << pipeline::render_report(r);
      }
    } else if (*report) {
      const std::string path =
          report_path.empty() ? (fs::path(g.out_dir) / "report.json").string() : report_path;
      const json r = read_json_file(path);
      pipeline::validate_report(r);
      if (report_json) std::cout << r.dump(2) << "\n";
      else std::cout << pipeline::render_report(r);
      if (r.at("status") != "complete") return kExitFailure;
    }
  } catch (const pipeline::StageFailure& e) {
    std::cerr << "gmslm: " << e.what() << "\n";
    return kExitFailure;
  } catch (const Error& e) {
    std::cerr << "gmslm: " << e.what() << "\n";
    return e.code() == Errc::invalid_argument ? kExitInvalid : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "gmslm: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
