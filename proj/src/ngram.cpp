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

#include "gmslm/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace gmslm::ulm {

std::string to_string(Smoothing s) { return s == Smoothing::add_k ? "add_k" : "kneser_ney"; }

Smoothing parse_smoothing(const std::string& s) {
  if (s == "add_k") return Smoothing::add_k;
  if (s == "kneser_ney" || s == "kn") return Smoothing::kneser_ney;
  throw Error(Errc::invalid_argument, "unknown smoothing '" + s + "'");
}

NGramLM NGramLM::train(const std::vector<units::UnitSequence>& corpus, int k,
                       const NGramOptions& opts) {
  require(!corpus.empty(), Errc::invalid_argument, "n-gram training needs a non-empty corpus");
  require(opts.order >= 1 && opts.order <= 6, Errc::invalid_argument, "order must lie in [1, 6]");
  require(k >= 1, Errc::invalid_argument, "vocabulary size must be positive");
  require(opts.add_k >= 0.0, Errc::invalid_argument, "add_k must be non-negative");
  require(opts.discount > 0.0 && opts.discount < 1.0, Errc::invalid_argument,
          "discount must lie in (0, 1)");

  NGramLM lm;
  lm.k_ = k;
  lm.opts_ = opts;
  lm.raw_.resize(static_cast<std::size_t>(opts.order));
  const int n = opts.order;
  const int bos = k + 1, eos = k;
  std::vector<int> padded;
  for (const auto& seq : corpus) {
    units::check_range(seq, k);
    padded.assign(static_cast<std::size_t>(n - 1), bos);
    padded.insert(padded.end(), seq.begin(), seq.end());
    padded.push_back(eos);
    for (std::size_t i = static_cast<std::size_t>(n - 1); i < padded.size(); ++i) {
      for (int m = 1; m <= n; ++m) {
        std::vector<int> ctx(padded.begin() + static_cast<std::ptrdiff_t>(i) - (m - 1),
                             padded.begin() + static_cast<std::ptrdiff_t>(i));
        Entry& e = lm.raw_[m - 1][ctx];
        e.next[padded[i]] += 1.0;
        e.total += 1.0;
      }
    }
  }
  lm.build_continuations();
  return lm;
}

void NGramLM::build_continuations() {
  const int n = opts_.order;
  cont_.assign(static_cast<std::size_t>(n), Table{});
  for (int m = 1; m < n; ++m) {
    // Each distinct (m+1)-gram (x, ctx, w) adds one to N1+(. ctx w).
    for (const auto& [ctx, entry] : raw_[m]) {
      std::vector<int> shorter(ctx.begin() + 1, ctx.end());
      Entry& e = cont_[m - 1][shorter];
      for (const auto& [w, count] : entry.next) {
        if (count <= 0.0) continue;
        e.next[w] += 1.0;
        e.total += 1.0;
      }
    }
  }
}

double NGramLM::add_k_prob(std::span<const int> ctx, int w) const {
  const double vocab = k_ + 1;
  const std::size_t m = ctx.size() + 1;
  const Table& t = raw_[m - 1];
  auto it = t.find(std::vector<int>(ctx.begin(), ctx.end()));
  const double total = it == t.end() ? 0.0 : it->second.total;
  if (opts_.add_k == 0.0 && total == 0.0) {
    if (ctx.empty()) return 1.0 / vocab;
    return add_k_prob(ctx.subspan(1), w);
  }
  double c = 0.0;
  if (it != t.end()) {
    auto jt = it->second.next.find(w);
    if (jt != it->second.next.end()) c = jt->second;
  }
  return (c + opts_.add_k) / (total + opts_.add_k * vocab);
}

double NGramLM::kn_prob(std::span<const int> ctx, int w, bool top) const {
  const double vocab = k_ + 1;
  const double d = opts_.discount;
  const std::size_t m = ctx.size() + 1;
  const Table& t = top ? raw_[m - 1] : cont_[m - 1];
  auto it = t.find(std::vector<int>(ctx.begin(), ctx.end()));
  if (it == t.end() || it->second.total <= 0.0) {
    if (ctx.empty()) return 1.0 / vocab;
    return kn_prob(ctx.subspan(1), w, false);
  }
  const Entry& e = it->second;
  double c = 0.0;
  auto jt = e.next.find(w);
  if (jt != e.next.end()) c = jt->second;
  const double types = static_cast<double>(e.next.size());
  const double lower = ctx.empty() ? 1.0 / vocab : kn_prob(ctx.subspan(1), w, false);
  return std::max(c - d, 0.0) / e.total + d * types / e.total * lower;
}

double NGramLM::prob(std::span<const int> context, int outcome) const {
  require(outcome >= 0 && outcome <= k_, Errc::out_of_vocabulary,
          "outcome " + std::to_string(outcome) + " outside [0, K]");
  const std::size_t keep = std::min<std::size_t>(context.size(), opts_.order - 1);
  const auto ctx = context.subspan(context.size() - keep);
  return opts_.smoothing == Smoothing::add_k ? add_k_prob(ctx, outcome)
                                              : kn_prob(ctx, outcome, true);
}

std::vector<int> NGramLM::visible_context(std::span<const int> history,
                                          const ContextPolicy& cp) const {
  const std::size_t reach = static_cast<std::size_t>(opts_.order - 1);
  const bool sees_start = cp.unlimited() || history.size() <= static_cast<std::size_t>(cp.window);
  std::vector<int> ctx;
  if (sees_start) {
    ctx.assign(reach, k_ + 1);
    ctx.insert(ctx.end(), history.begin(), history.end());
    return std::vector<int>(ctx.end() - static_cast<std::ptrdiff_t>(reach), ctx.end());
  }
  const std::size_t visible = std::min(reach, static_cast<std::size_t>(cp.window));
  return std::vector<int>(history.end() - static_cast<std::ptrdiff_t>(visible), history.end());
}

std::vector<double> NGramLM::next_log_probs(std::span<const int> history,
                                            const ContextPolicy& cp) const {
  cp.validate();
  const auto ctx = visible_context(history, cp);
  std::vector<double> out(static_cast<std::size_t>(k_ + 1));
  for (int w = 0; w <= k_; ++w) out[w] = std::log(prob(ctx, w));
  return out;
}

double NGramLM::score(const units::UnitSequence& seq, const ContextPolicy& cp) const {
  cp.validate();
  units::check_range(seq, k_);
  double total = 0.0;
  const std::span<const int> all(seq);
  for (std::size_t t = 0; t <= seq.size(); ++t) {
    const auto ctx = visible_context(all.first(t), cp);
    total += std::log(prob(ctx, t < seq.size() ? seq[t] : k_));
  }
  return total;
}

nlohmann::json NGramLM::to_json() const {
  nlohmann::json tables = nlohmann::json::array();
  for (const Table& t : raw_) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [ctx, e] : t) {
      nlohmann::json next = nlohmann::json::array();
      for (const auto& [w, c] : e.next) next.push_back({w, c});
      rows.push_back({{"ctx", ctx}, {"next", next}});
    }
    tables.push_back(rows);
  }
  nlohmann::json j{{"format", "gmslm.ngram"},
                   {"version", 1},
                   {"K", k_},
                   {"order", opts_.order},
                   {"smoothing", to_string(opts_.smoothing)},
                   {"add_k", opts_.add_k},
                   {"discount", opts_.discount},
                   {"counts", tables}};
  if (!fingerprint.empty()) j["fingerprint"] = fingerprint;
  return j;
}

NGramLM NGramLM::from_json(const nlohmann::json& j) {
  require(j.value("format", std::string()) == "gmslm.ngram" && j.value("version", 0) == 1,
          Errc::format_error, "not a version-1 n-gram model");
  NGramLM lm;
  lm.k_ = j.at("K").get<int>();
  lm.opts_.order = j.at("order").get<int>();
  lm.opts_.smoothing = parse_smoothing(j.at("smoothing").get<std::string>());
  lm.opts_.add_k = j.at("add_k").get<double>();
  lm.opts_.discount = j.at("discount").get<double>();
  lm.fingerprint = j.value("fingerprint", std::string());
  const auto& tables = j.at("counts");
  require(static_cast<int>(tables.size()) == lm.opts_.order, Errc::format_error,
          "count tables do not match the model order");
  lm.raw_.resize(tables.size());
  for (std::size_t m = 0; m < tables.size(); ++m) {
    for (const auto& row : tables[m]) {
      Entry e;
      for (const auto& wc : row.at("next")) {
        e.next[wc.at(0).get<int>()] = wc.at(1).get<double>();
        e.total += wc.at(1).get<double>();
      }
      lm.raw_[m][row.at("ctx").get<std::vector<int>>()] = std::move(e);
    }
  }
  lm.build_continuations();
  return lm;
}

void NGramLM::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  require(static_cast<bool>(out), Errc::io_error, "cannot write " + path.string());
  out << to_json().dump() << '\n';
}

NGramLM NGramLM::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io_error, "cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format_error, path.string() + ": " + e.what());
  }
}

}  // namespace gmslm::ulm
