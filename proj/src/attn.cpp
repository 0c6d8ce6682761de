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

#include "gmslm/attn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "nn_ops.hpp"

namespace gmslm::ulm {

using nn::layer_norm;
using nn::layer_norm_backward;
using nn::LnCache;
using nn::log_softmax_rows;

namespace {

constexpr int kPerLayer = 12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Offsets of the per-layer tensors.
enum LayerParam {
  kLn1G, kLn1B, kQkvW, kQkvB, kProjW, kProjB, kLn2G, kLn2B, kFc1W, kFc1B, kFc2W, kFc2B
};

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x))); }

double gelu_grad(double x) {
  const double a = kGeluC * (x + 0.044715 * x * x * x);
  const double th = std::tanh(a);
  return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

bool visible(int query, int key, const ContextPolicy& cp) {
  if (key > query) return false;
  if (cp.unlimited() || key == 0) return true;
  if (key <= cp.keep_first) return true;
  return key >= query - cp.window + 1;
}

}  // namespace

struct AttnLM::Cache {
  struct Layer {
    Matrix x_in;
    LnCache ln1;
    Matrix h1;
    Matrix qkv;
    std::vector<Matrix> probs;  // per head, T x T
    Matrix att;                 // concatenated head outputs
    Matrix x_mid;
    LnCache ln2;
    Matrix h2;
    Matrix pre;  // fc1 pre-activation
    Matrix act;  // gelu(pre)
  };
  std::vector<int> input;
  std::vector<Layer> layers;
  Matrix x_final;
  LnCache lnf;
  Matrix hf;
};

void AttnConfig::validate() const {
  require(vocab >= 1 && layers >= 1 && heads >= 1 && embed >= 1 && ffn >= 1 && max_context >= 2,
          Errc::invalid_argument, "attention config sizes must be positive");
  require(embed % heads == 0, Errc::invalid_argument, "embed must be divisible by heads");
  require(init_scale >= 0.0, Errc::invalid_argument, "init_scale must be non-negative");
}

void to_json(nlohmann::json& j, const AttnConfig& c) {
  j = nlohmann::json{{"vocab", c.vocab},       {"layers", c.layers},
                     {"heads", c.heads},       {"embed", c.embed},
                     {"ffn", c.ffn},           {"max_context", c.max_context},
                     {"init_scale", c.init_scale}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, AttnConfig& c) {
  const AttnConfig d;
  c.vocab = j.value("vocab", d.vocab);
  c.layers = j.value("layers", d.layers);
  c.heads = j.value("heads", d.heads);
  c.embed = j.value("embed", d.embed);
  c.ffn = j.value("ffn", d.ffn);
  c.max_context = j.value("max_context", d.max_context);
  c.init_scale = j.value("init_scale", d.init_scale);
  c.seed = j.value("seed", d.seed);
}

AttnLM::AttnLM(const AttnConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int v = ids(), e = cfg_.embed, f = cfg_.ffn;
  Rng rng = Rng::derive(cfg_.seed, "ulm.attn.init");
  auto add = [&](std::string name, int rows, int cols, double fill, bool random) {
    Tensor t{std::move(name), Matrix::Constant(rows, cols, fill), Matrix::Zero(rows, cols)};
    if (random)
      for (Eigen::Index i = 0; i < t.value.size(); ++i)
        t.value.data()[i] = rng.uniform(-cfg_.init_scale, cfg_.init_scale);
    params_.push_back(std::move(t));
  };
  add("tok_emb", v, e, 0.0, true);
  add("pos_emb", cfg_.max_context, e, 0.0, true);
  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string p = "l" + std::to_string(l) + ".";
    add(p + "ln1.g", 1, e, 1.0, false);
    add(p + "ln1.b", 1, e, 0.0, false);
    add(p + "qkv.w", e, 3 * e, 0.0, true);
    add(p + "qkv.b", 1, 3 * e, 0.0, false);
    add(p + "proj.w", e, e, 0.0, true);
    add(p + "proj.b", 1, e, 0.0, false);
    add(p + "ln2.g", 1, e, 1.0, false);
    add(p + "ln2.b", 1, e, 0.0, false);
    add(p + "fc1.w", e, f, 0.0, true);
    add(p + "fc1.b", 1, f, 0.0, false);
    add(p + "fc2.w", f, e, 0.0, true);
    add(p + "fc2.b", 1, e, 0.0, false);
  }
  add("lnf.g", 1, e, 1.0, false);
  add("lnf.b", 1, e, 0.0, false);
  add("out.w", e, v, 0.0, true);
  add("out.b", 1, v, 0.0, false);
}

std::size_t AttnLM::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : params_) n += static_cast<std::size_t>(t.value.size());
  return n;
}

std::size_t AttnLM::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  throw Error(Errc::invalid_argument, "no tensor named " + name);
}

void AttnLM::zero_grad() {
  for (auto& t : params_) t.grad.setZero();
}

Matrix AttnLM::run(std::span<const int> input, const ContextPolicy& cp, Cache* cache) const {
  cp.validate();
  const int t_len = static_cast<int>(input.size());
  require(t_len >= 1, Errc::invalid_argument, "empty input");
  require(t_len <= cfg_.max_context, Errc::sequence_too_long,
          "input of " + std::to_string(t_len) + " positions exceeds max context " +
              std::to_string(cfg_.max_context));
  for (int id : input)
    require(id >= 0 && id < ids(), Errc::out_of_vocabulary, "input id out of range");

  const int e = cfg_.embed, heads = cfg_.heads, dh = e / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Matrix& tok = params_[0].value;
  const Matrix& pos = params_[1].value;

  Matrix x(t_len, e);
  for (int p = 0; p < t_len; ++p) x.row(p) = tok.row(input[p]) + pos.row(p);

  Cache local;
  Cache& c = cache ? *cache : local;
  c.input.assign(input.begin(), input.end());
  c.layers.resize(static_cast<std::size_t>(cfg_.layers));

  for (int l = 0; l < cfg_.layers; ++l) {
    const std::size_t base = 2 + static_cast<std::size_t>(l) * kPerLayer;
    auto w = [&](int off) -> const Matrix& { return params_[base + off].value; };
    Cache::Layer& L = c.layers[l];
    L.x_in = x;
    L.h1 = layer_norm(x, w(kLn1G), w(kLn1B), L.ln1);
    L.qkv = L.h1 * w(kQkvW);
    L.qkv.rowwise() += w(kQkvB).row(0);
    L.att.resize(t_len, e);
    L.probs.resize(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
      const auto q = L.qkv.middleCols(h * dh, dh);
      const auto k = L.qkv.middleCols(e + h * dh, dh);
      const auto v = L.qkv.middleCols(2 * e + h * dh, dh);
      Matrix s = (q * k.transpose()) * scale;
      for (int i = 0; i < t_len; ++i) {
        double m = kNegInf;
        for (int j = 0; j < t_len; ++j) {
          if (!visible(i, j, cp)) s(i, j) = kNegInf;
          else m = std::max(m, s(i, j));
        }
        double sum = 0.0;
        for (int j = 0; j < t_len; ++j) {
          s(i, j) = s(i, j) == kNegInf ? 0.0 : std::exp(s(i, j) - m);
          sum += s(i, j);
        }
        s.row(i) /= sum;
      }
      L.att.middleCols(h * dh, dh) = s * v;
      L.probs[h] = std::move(s);
    }
    Matrix proj = L.att * w(kProjW);
    proj.rowwise() += w(kProjB).row(0);
    L.x_mid = x + proj;
    L.h2 = layer_norm(L.x_mid, w(kLn2G), w(kLn2B), L.ln2);
    L.pre = L.h2 * w(kFc1W);
    L.pre.rowwise() += w(kFc1B).row(0);
    L.act = L.pre.unaryExpr([](double z) { return gelu(z); });
    Matrix ff = L.act * w(kFc2W);
    ff.rowwise() += w(kFc2B).row(0);
    x = L.x_mid + ff;
  }

  const std::size_t tail = 2 + static_cast<std::size_t>(cfg_.layers) * kPerLayer;
  c.x_final = x;
  c.hf = layer_norm(x, params_[tail].value, params_[tail + 1].value, c.lnf);
  Matrix logits = c.hf * params_[tail + 2].value;
  logits.rowwise() += params_[tail + 3].value.row(0);
  return logits;
}

void AttnLM::backward(const Cache& c, const Matrix& dlogits) {
  const int t_len = static_cast<int>(c.input.size());
  const int e = cfg_.embed, heads = cfg_.heads, dh = e / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t tail = 2 + static_cast<std::size_t>(cfg_.layers) * kPerLayer;

  Tensor& out_w = params_[tail + 2];
  Tensor& out_b = params_[tail + 3];
  out_w.grad += c.hf.transpose() * dlogits;
  out_b.grad.row(0) += dlogits.colwise().sum();
  Matrix dhf = dlogits * out_w.value.transpose();
  Matrix dx = layer_norm_backward(dhf, c.lnf, params_[tail].value, params_[tail].grad,
                                  params_[tail + 1].grad);

  for (int l = cfg_.layers - 1; l >= 0; --l) {
    const std::size_t base = 2 + static_cast<std::size_t>(l) * kPerLayer;
    auto P = [&](int off) -> Tensor& { return params_[base + off]; };
    const Cache::Layer& L = c.layers[l];

    // Feed-forward branch.
    P(kFc2W).grad += L.act.transpose() * dx;
    P(kFc2B).grad.row(0) += dx.colwise().sum();
    Matrix dact = dx * P(kFc2W).value.transpose();
    Matrix dpre = dact.cwiseProduct(L.pre.unaryExpr([](double z) { return gelu_grad(z); }));
    P(kFc1W).grad += L.h2.transpose() * dpre;
    P(kFc1B).grad.row(0) += dpre.colwise().sum();
    Matrix dh2 = dpre * P(kFc1W).value.transpose();
    Matrix dx_mid = dx + layer_norm_backward(dh2, L.ln2, P(kLn2G).value, P(kLn2G).grad,
                                             P(kLn2B).grad);

    // Attention branch.
    P(kProjW).grad += L.att.transpose() * dx_mid;
    P(kProjB).grad.row(0) += dx_mid.colwise().sum();
    Matrix datt = dx_mid * P(kProjW).value.transpose();
    Matrix dqkv = Matrix::Zero(t_len, 3 * e);
    for (int h = 0; h < heads; ++h) {
      const Matrix& a = L.probs[h];
      const auto q = L.qkv.middleCols(h * dh, dh);
      const auto k = L.qkv.middleCols(e + h * dh, dh);
      const auto v = L.qkv.middleCols(2 * e + h * dh, dh);
      const auto dout = datt.middleCols(h * dh, dh);
      Matrix da = dout * v.transpose();
      dqkv.middleCols(2 * e + h * dh, dh) = a.transpose() * dout;
      Matrix ds(t_len, t_len);
      for (int i = 0; i < t_len; ++i) {
        const double dot = da.row(i).dot(a.row(i));
        ds.row(i) = a.row(i).array() * (da.row(i).array() - dot);
      }
      ds *= scale;
      dqkv.middleCols(h * dh, dh) = ds * k;
      dqkv.middleCols(e + h * dh, dh) = ds.transpose() * q;
    }
    P(kQkvW).grad += L.h1.transpose() * dqkv;
    P(kQkvB).grad.row(0) += dqkv.colwise().sum();
    Matrix dh1 = dqkv * P(kQkvW).value.transpose();
    dx = dx_mid + layer_norm_backward(dh1, L.ln1, P(kLn1G).value, P(kLn1G).grad, P(kLn1B).grad);
  }

  for (int p = 0; p < t_len; ++p) {
    params_[0].grad.row(c.input[p]) += dx.row(p);
    params_[1].grad.row(p) += dx.row(p);
  }
}

Matrix AttnLM::forward(std::span<const int> input, const ContextPolicy& cp) const {
  return run(input, cp, nullptr);
}

Matrix AttnLM::attn_forward(const units::UnitSequence& seq, const ContextPolicy& cp) const {
  units::check_range(seq, cfg_.vocab);
  std::vector<int> input{bos()};
  input.insert(input.end(), seq.begin(), seq.end());
  return run(input, cp, nullptr);
}

double AttnLM::loss(const units::UnitSequence& seq, const ContextPolicy& cp, bool accumulate_grad,
                    double grad_scale) {
  units::check_range(seq, cfg_.vocab);
  std::vector<int> input{bos()};
  input.insert(input.end(), seq.begin(), seq.end());
  std::vector<int> targets(seq.begin(), seq.end());
  targets.push_back(eos());

  Cache cache;
  const Matrix logits = run(input, cp, accumulate_grad ? &cache : nullptr);
  const Matrix logp = log_softmax_rows(logits);
  const double t_len = static_cast<double>(targets.size());
  double total = 0.0;
  for (std::size_t p = 0; p < targets.size(); ++p) total -= logp(p, targets[p]);
  if (accumulate_grad) {
    Matrix d = logp.array().exp();
    for (std::size_t p = 0; p < targets.size(); ++p) d(p, targets[p]) -= 1.0;
    d *= grad_scale / t_len;
    backward(cache, d);
  }
  return total / t_len;
}

std::vector<double> AttnLM::next_log_probs(std::span<const int> history,
                                           const ContextPolicy& cp) const {
  std::vector<int> input{bos()};
  for (int tok : history) {
    require(tok >= 0 && tok < cfg_.vocab, Errc::out_of_vocabulary, "history token out of range");
    input.push_back(tok);
  }
  const Matrix logits = run(input, cp, nullptr);
  const Eigen::RowVectorXd last = logits.row(logits.rows() - 1).head(cfg_.vocab + 1);
  std::vector<double> out(last.data(), last.data() + last.size());
  const double lse = log_sum_exp(out);
  for (double& v : out) v -= lse;
  return out;
}

double AttnLM::score(const units::UnitSequence& seq, const ContextPolicy& cp) const {
  const Matrix logp = log_softmax_rows(attn_forward(seq, cp));
  double total = 0.0;
  for (std::size_t p = 0; p <= seq.size(); ++p)
    total += logp(static_cast<Eigen::Index>(p), p < seq.size() ? seq[p] : eos());
  return total;
}

nlohmann::json AttnLM::to_json() const {
  nlohmann::json tensors = nlohmann::json::object();
  for (const auto& t : params_)
    tensors[t.name] = std::vector<double>(t.value.data(), t.value.data() + t.value.size());
  nlohmann::json j{{"format", "gmslm.attn"}, {"version", 1}, {"config", cfg_},
                   {"parameters", parameter_count()}, {"tensors", tensors}};
  if (!fingerprint.empty()) j["fingerprint"] = fingerprint;
  return j;
}

AttnLM AttnLM::from_json(const nlohmann::json& j) {
  require(j.value("format", std::string()) == "gmslm.attn" && j.value("version", 0) == 1,
          Errc::format_error, "not a version-1 attention model");
  AttnLM m(j.at("config").get<AttnConfig>());
  for (auto& t : m.params_) {
    const auto values = j.at("tensors").at(t.name).get<std::vector<double>>();
    require(static_cast<Eigen::Index>(values.size()) == t.value.size(), Errc::format_error,
            "tensor " + t.name + " has the wrong size");
    std::copy(values.begin(), values.end(), t.value.data());
  }
  m.fingerprint = j.value("fingerprint", std::string());
  return m;
}

void AttnLM::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  require(static_cast<bool>(out), Errc::io_error, "cannot write " + path.string());
  out << to_json().dump() << '\n';
}

AttnLM AttnLM::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io_error, "cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format_error, path.string() + ": " + e.what());
  }
}

std::vector<double> attn_train(AttnLM& model, const std::vector<units::UnitSequence>& corpus,
                               const TrainOptions& opts) {
  require(opts.steps >= 1 && opts.batch >= 1, Errc::invalid_argument,
          "steps and batch must be positive");
  require(opts.lr >= 0.0, Errc::invalid_argument, "learning rate must be non-negative");
  const int chunk = std::min(opts.chunk, model.config().max_context - 1);
  require(chunk >= 1, Errc::invalid_argument, "chunk must be positive");

  std::vector<units::UnitSequence> pieces;
  for (const auto& seq : corpus) {
    if (seq.size() <= static_cast<std::size_t>(chunk)) {
      pieces.push_back(seq);
      continue;
    }
    for (std::size_t at = 0; at < seq.size(); at += chunk)
      pieces.emplace_back(seq.begin() + at, seq.begin() + std::min(seq.size(), at + chunk));
  }
  require(!pieces.empty(), Errc::invalid_argument, "training corpus is empty");

  auto& params = model.tensors();
  std::vector<Matrix*> values;
  std::vector<const Matrix*> grads;
  for (auto& t : params) {
    values.push_back(&t.value);
    grads.push_back(&t.grad);
  }
  nn::Adam adam(opts.beta1, opts.beta2, opts.eps);

  Rng rng = Rng::derive(opts.seed, "ulm.attn.train");
  const bool full_batch = static_cast<std::size_t>(opts.batch) >= pieces.size();
  const int per_step = full_batch ? static_cast<int>(pieces.size()) : opts.batch;
  const ContextPolicy cp;
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(opts.steps));
  for (int step = 1; step <= opts.steps; ++step) {
    model.zero_grad();
    double loss = 0.0;
    for (int b = 0; b < per_step; ++b) {
      const auto& piece =
          full_batch ? pieces[b] : pieces[static_cast<std::size_t>(rng.below(pieces.size()))];
      loss += model.loss(piece, cp, true, 1.0 / per_step);
    }
    loss /= per_step;
    if (!std::isfinite(loss))
      throw Error(Errc::non_finite_loss,
                  "step " + std::to_string(step) + ": loss " + format_double(loss));
    trace.push_back(loss);

    adam.step(values, grads, opts.lr);
  }
  return trace;
}

}  // namespace gmslm::ulm
