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


#include "gmslm/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace gmslm::bench {

std::string to_string(Task t) {
  switch (t) {
    case Task::shuffle: return "shuffle";
    case Task::concat: return "concat";
    case Task::reversal: return "reversal";
    case Task::caller_change: return "caller_change";
    case Task::receiver_change: return "receiver_change";
  }
  return "unknown";
}

Task parse_task(const std::string& s) {
  for (Task t : {Task::shuffle, Task::concat, Task::reversal, Task::caller_change,
                 Task::receiver_change})
    if (to_string(t) == s) return t;
  throw Error(Errc::invalid_argument, "unknown benchmark task '" + s + "'");
}

namespace {

nlohmann::json side_json(const Side& s) {
  nlohmann::json j{{"ref", s.ref}};
  if (s.units) j["units"] = *s.units;
  return j;
}

Side side_from(const nlohmann::json& j) {
  Side s;
  s.ref = j.at("ref").get<std::string>();
  if (j.contains("units")) s.units = j.at("units").get<units::UnitSequence>();
  return s;
}

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items) {
  std::ofstream out(path);
  require(static_cast<bool>(out), Errc::io_error, "cannot write " + path.string());
  for (const T& item : items) out << nlohmann::json(item).dump() << '\n';
}

template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io_error, "cannot open " + path.string());
  std::vector<T> items;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      items.push_back(nlohmann::json::parse(line).get<T>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::format_error,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return items;
}

bool same_window(const seg::SegmentWindow& a, const dsp::Waveform& wa,
                 const seg::SegmentWindow& b, const dsp::Waveform& wb) {
  return a.start_s == b.start_s && a.end_s == b.end_s && a.calls == b.calls &&
         wa.samples == wb.samples;
}

}  // namespace

void to_json(nlohmann::json& j, const BenchmarkPair& p) {
  j = nlohmann::json{{"task", to_string(p.task)},
                     {"positive", side_json(p.positive)},
                     {"distractor", side_json(p.distractor)},
                     {"seed", p.seed},
                     {"provenance", p.provenance}};
}

void from_json(const nlohmann::json& j, BenchmarkPair& p) {
  p.task = parse_task(j.at("task").get<std::string>());
  p.positive = side_from(j.at("positive"));
  p.distractor = side_from(j.at("distractor"));
  p.seed = j.value("seed", std::uint64_t{0});
  p.provenance = j.value("provenance", nlohmann::json::object());
}

void write_pairs(const std::filesystem::path& path, const std::vector<BenchmarkPair>& pairs) {
  write_jsonl(path, pairs);
}

std::vector<BenchmarkPair> read_pairs(const std::filesystem::path& path) {
  return read_jsonl<BenchmarkPair>(path);
}

std::vector<int> non_identity_permutation(int n, Rng& rng) {
  require(n >= 2, Errc::ineligible_window, "a shuffle needs at least two calls");
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (;;) {
    for (int i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    for (int i = 0; i < n; ++i)
      if (perm[i] != i) return perm;
  }
}

std::vector<Span> call_spans(const seg::SegmentWindow& w, double sample_rate,
                             std::size_t n_samples) {
  std::vector<Span> spans;
  std::size_t prev = 0;
  for (const auto& c : w.calls) {
    require(c.onset_s >= 0.0 && c.offset_s > c.onset_s, Errc::invalid_argument,
            "call boundaries must be increasing and non-negative");
    auto at = [&](double t) {
      return std::min(n_samples, static_cast<std::size_t>(std::llround(t * sample_rate)));
    };
    Span s{at(c.onset_s), at(c.offset_s)};
    require(s.begin >= prev, Errc::invalid_argument, "calls overlap or are unsorted");
    spans.push_back(s);
    prev = s.end;
  }
  return spans;
}

void UnitWindow::validate() const {
  std::size_t prev = 0;
  for (const Span& s : calls) {
    require(s.begin >= prev && s.begin <= s.end && s.end <= tokens.size(),
            Errc::invalid_argument, "call spans must be sorted, disjoint and in range");
    prev = s.end;
  }
}

Shuffled make_shuffle(const seg::SegmentWindow& w, const dsp::Waveform& audio,
                      std::uint64_t seed) {
  require(w.calls.size() >= 2, Errc::ineligible_window,
          "shuffle needs >= 2 calls, window has " + std::to_string(w.calls.size()));
  audio.validate();
  Rng rng = Rng::derive(seed, "bench.shuffle");
  Shuffled out;
  out.order = non_identity_permutation(static_cast<int>(w.calls.size()), rng);
  const auto spans = call_spans(w, audio.sample_rate, audio.samples.size());
  out.audio.sample_rate = audio.sample_rate;
  out.audio.samples = permute_spans(audio.samples, spans, out.order);
  return out;
}

UnitWindow shuffle_units(const UnitWindow& w, std::uint64_t seed, std::vector<int>* order) {
  w.validate();
  require(w.calls.size() >= 2, Errc::ineligible_window, "shuffle needs >= 2 calls");
  Rng rng = Rng::derive(seed, "bench.shuffle");
  const auto perm = non_identity_permutation(static_cast<int>(w.calls.size()), rng);
  UnitWindow out;
  out.tokens = permute_spans(w.tokens, w.calls, perm);
  // Slot i now holds span perm[i]; recompute the spans in the new layout.
  std::ptrdiff_t delta = 0;
  for (std::size_t i = 0; i < w.calls.size(); ++i) {
    const Span& src = w.calls[perm[i]];
    const auto begin =
        static_cast<std::size_t>(static_cast<std::ptrdiff_t>(w.calls[i].begin) + delta);
    out.calls.push_back({begin, begin + (src.end - src.begin)});
    delta += static_cast<std::ptrdiff_t>(src.end - src.begin) -
             static_cast<std::ptrdiff_t>(w.calls[i].end - w.calls[i].begin);
  }
  if (order) *order = perm;
  return out;
}

Concatenated make_concat(const seg::SegmentWindow& a, const dsp::Waveform& audio_a,
                         const seg::SegmentWindow& b, const dsp::Waveform& audio_b) {
  for (const auto* w : {&a, &b})
    require(w->calls.size() >= 2 && w->calls.size() % 2 == 0, Errc::ineligible_window,
            "concat needs an even call count >= 2, got " + std::to_string(w->calls.size()));
  require(!same_window(a, audio_a, b, audio_b), Errc::invalid_argument,
          "concat needs two different windows");
  require(audio_a.sample_rate == audio_b.sample_rate, Errc::invalid_argument,
          "concat windows have different sample rates");
  const auto sa = call_spans(a, audio_a.sample_rate, audio_a.samples.size());
  const auto sb = call_spans(b, audio_b.sample_rate, audio_b.samples.size());
  const std::size_t ha = a.calls.size() / 2, hb = b.calls.size() / 2;
  const std::size_t cut_a = sa[ha - 1].end, cut_b = sb[hb - 1].end;

  Concatenated out;
  out.audio.sample_rate = audio_a.sample_rate;
  out.audio.samples.assign(audio_a.samples.begin(), audio_a.samples.begin() + cut_a);
  out.audio.samples.insert(out.audio.samples.end(), audio_b.samples.begin() + cut_b,
                           audio_b.samples.end());
  const double sr = audio_a.sample_rate;
  for (std::size_t i = 0; i < ha; ++i) out.calls.push_back(a.calls[i]);
  const double shift = static_cast<double>(cut_a) / sr - static_cast<double>(cut_b) / sr;
  for (std::size_t i = hb; i < b.calls.size(); ++i)
    out.calls.push_back({b.calls[i].onset_s + shift, b.calls[i].offset_s + shift});
  return out;
}

UnitWindow concat_units(const UnitWindow& a, const UnitWindow& b) {
  a.validate();
  b.validate();
  for (const auto* w : {&a, &b})
    require(w->calls.size() >= 2 && w->calls.size() % 2 == 0, Errc::ineligible_window,
            "concat needs an even call count >= 2");
  require(!(a.tokens == b.tokens && a.calls == b.calls), Errc::invalid_argument,
          "concat needs two different windows");
  const std::size_t cut_a = a.calls[a.calls.size() / 2 - 1].end;
  const std::size_t cut_b = b.calls[b.calls.size() / 2 - 1].end;
  UnitWindow out;
  out.tokens.assign(a.tokens.begin(), a.tokens.begin() + cut_a);
  out.tokens.insert(out.tokens.end(), b.tokens.begin() + cut_b, b.tokens.end());
  out.calls.assign(a.calls.begin(), a.calls.begin() + a.calls.size() / 2);
  for (std::size_t i = b.calls.size() / 2; i < b.calls.size(); ++i)
    out.calls.push_back({b.calls[i].begin - cut_b + cut_a, b.calls[i].end - cut_b + cut_a});
  return out;
}

dsp::Waveform make_reversal(const dsp::Waveform& audio) {
  audio.validate();
  dsp::Waveform out = audio;
  std::reverse(out.samples.begin(), out.samples.end());
  return out;
}

units::UnitSequence reverse_units(const units::UnitSequence& u) {
  return units::UnitSequence(u.rbegin(), u.rend());
}

void PheeRecord::validate() const {
  require(caller_id != receiver_id, Errc::invalid_argument,
          "caller and receiver must differ (" + caller_id + ")");
  require(gap_s >= 0.0 && gap_s <= seg::kMaxWindowSeconds, Errc::invalid_argument,
          "response gap must lie in [0, 10] s");
}

void to_json(nlohmann::json& j, const PheeRecord& r) {
  j = nlohmann::json{{"caller_id", r.caller_id},
                     {"receiver_id", r.receiver_id},
                     {"call_ref", r.call_ref},
                     {"response_ref", r.response_ref},
                     {"gap_s", r.gap_s}};
}

void from_json(const nlohmann::json& j, PheeRecord& r) {
  r.caller_id = j.at("caller_id").get<std::string>();
  r.receiver_id = j.at("receiver_id").get<std::string>();
  r.call_ref = j.at("call_ref").get<std::string>();
  r.response_ref = j.at("response_ref").get<std::string>();
  r.gap_s = j.value("gap_s", 0.0);
}

void write_records(const std::filesystem::path& path, const std::vector<PheeRecord>& records) {
  write_jsonl(path, records);
}

std::vector<PheeRecord> read_records(const std::filesystem::path& path) {
  return read_jsonl<PheeRecord>(path);
}

PheeResult make_phee_pairs(const std::vector<PheeRecord>& records, Task mode, std::uint64_t seed,
                           int augment) {
  require(mode == Task::caller_change || mode == Task::receiver_change, Errc::invalid_argument,
          "phee pairs need caller_change or receiver_change");
  require(augment >= 1, Errc::invalid_argument, "augment must be >= 1");
  for (const auto& r : records) r.validate();

  PheeResult out;
  std::set<std::string> responders;
  for (const auto& r : records) responders.insert(r.receiver_id);
  Rng rng = Rng::derive(seed, "bench.phee." + to_string(mode));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const PheeRecord& r = records[i];
    if (mode == Task::caller_change && responders.size() < 2) {
      out.skipped.push_back({i, "fewer than two distinct responders in the corpus"});
      continue;
    }
    std::vector<std::size_t> cand;
    for (std::size_t j = 0; j < records.size(); ++j) {
      const PheeRecord& o = records[j];
      if (j == i || o.response_ref == r.response_ref) continue;
      const bool ok = mode == Task::caller_change
                          ? o.receiver_id != r.receiver_id
                          : o.receiver_id == r.receiver_id && o.caller_id != r.caller_id;
      if (ok) cand.push_back(j);
    }
    if (cand.empty()) {
      out.skipped.push_back({i, mode == Task::caller_change
                                    ? "no response by a different responder"
                                    : "responder has no response addressed to another caller"});
      continue;
    }
    rng.shuffle(cand);
    for (int t = 0; t < augment; ++t) {
      const PheeRecord& o = records[cand[static_cast<std::size_t>(t) % cand.size()]];
      BenchmarkPair p;
      p.task = mode;
      p.seed = seed;
      p.positive.ref = r.call_ref + "+" + r.response_ref;
      p.distractor.ref = r.call_ref + "+" + o.response_ref;
      p.provenance = {{"record", i},
                      {"replacement", cand[static_cast<std::size_t>(t) % cand.size()]},
                      {"caller_id", r.caller_id},
                      {"responder_id", r.receiver_id},
                      {"replacement_responder_id", o.receiver_id},
                      {"call_ref", r.call_ref},
                      {"response_ref", r.response_ref},
                      {"replacement_ref", o.response_ref}};
      out.pairs.push_back(std::move(p));
    }
  }
  return out;
}

void attach_phee_units(std::vector<BenchmarkPair>& pairs,
                       const std::map<std::string, units::UnitSequence>& call_units) {
  auto lookup = [&](const std::string& ref) -> const units::UnitSequence& {
    auto it = call_units.find(ref);
    require(it != call_units.end(), Errc::invalid_argument, "no units for call " + ref);
    return it->second;
  };
  for (auto& p : pairs) {
    if (p.task != Task::caller_change && p.task != Task::receiver_change) continue;
    const auto& call = lookup(p.provenance.at("call_ref").get<std::string>());
    units::UnitSequence pos = call, neg = call;
    const auto& resp = lookup(p.provenance.at("response_ref").get<std::string>());
    const auto& repl = lookup(p.provenance.at("replacement_ref").get<std::string>());
    pos.insert(pos.end(), resp.begin(), resp.end());
    neg.insert(neg.end(), repl.begin(), repl.end());
    p.positive.units = std::move(pos);
    p.distractor.units = std::move(neg);
  }
}

EvalResult pairwise_eval(const ulm::SequenceScorer& model, const std::vector<BenchmarkPair>& pairs,
                         const ulm::ContextPolicy& cp) {
  require(!pairs.empty(), Errc::invalid_argument, "pairwise evaluation needs pairs");
  EvalResult r;
  for (const auto& p : pairs) {
    require(p.positive.units.has_value() && p.distractor.units.has_value(),
            Errc::invalid_argument, "pair " + p.positive.ref + " has no unit sequences");
    const bool correct = model.score(*p.positive.units, cp) > model.score(*p.distractor.units, cp);
    TaskScore& t = r.per_task[to_string(p.task)];
    for (TaskScore* s : {&t, &r.overall}) {
      s->total += 1;
      s->correct += correct ? 1 : 0;
    }
  }
  return r;
}

std::vector<BenchmarkPair> swapped(std::vector<BenchmarkPair> pairs) {
  for (auto& p : pairs) std::swap(p.positive, p.distractor);
  return pairs;
}

}  // namespace gmslm::bench
