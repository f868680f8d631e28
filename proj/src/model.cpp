// Copyright 2026 The lenctl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lenctl/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "lenctl/errors.hpp"

namespace lenctl {

std::string_view to_string(LengthControlMode mode) {
  switch (mode) {
    case LengthControlMode::kNone: return "none";
    case LengthControlMode::kRpe: return "rpe";
    case LengthControlMode::kPre: return "pre";
    case LengthControlMode::kLaam: return "laam";
  }
  return "unknown";
}

LengthControlMode parse_mode(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "none") return LengthControlMode::kNone;
  if (s == "rpe") return LengthControlMode::kRpe;
  if (s == "pre") return LengthControlMode::kPre;
  if (s == "laam") return LengthControlMode::kLaam;
  throw ConfigError("unknown length-control mode '" + s + "'");
}

void ModelConfig::validate() const {
  if (d_model < 2 || d_model % 2 != 0) throw ConfigError("d_model must be even");
  if (n_heads < 1 || d_model % n_heads != 0) {
    throw ConfigError("n_heads must divide d_model");
  }
  if (n_enc_layers < 1 || n_dec_layers < 1) {
    throw ConfigError("layer counts must be positive");
  }
  if (d_ff < 1 || vocab_size <= kFirstContentId || max_positions < 1) {
    throw ConfigError("d_ff, vocab_size and max_positions must be positive "
                      "(vocab_size > reserved ids)");
  }
  if (signal.d_model != d_model) {
    throw ConfigError("signal.d_model must equal d_model");
  }
  signal.validate();
  if (!(laam_boost >= 0.0)) throw ConfigError("laam_boost must be >= 0");
  if (!(ln_eps > 0.0)) throw ConfigError("ln_eps must be > 0");
  if (activation != "gelu" && activation != "relu") {
    throw ConfigError("activation must be gelu or relu");
  }
}

// ------------------------------------------------------------ parameters

Tensor& ModelParameters::add(std::string name, std::size_t rows,
                             std::size_t cols) {
  entries_.emplace_back(std::move(name), Tensor(rows, cols));
  return entries_.back().second;
}

std::size_t ModelParameters::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first == name) return i;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

std::size_t ModelParameters::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.size();
  return n;
}

void ModelParameters::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

void ModelParameters::set_requires_grad(bool on) {
  for (auto& [name, t] : entries_) t.set_requires_grad(on);
}

// ------------------------------------------------------------ signals

DecoderStepContext DecoderStepContext::at(std::int64_t t, std::int64_t l) {
  DecoderStepContext ctx;
  ctx.step = t;
  ctx.target_length = l;
  ctx.ratio = progress_ratio(t, l);
  ctx.remaining = std::max<std::int64_t>(l - t, 0);
  return ctx;
}

EmbeddingVector control_signal(const DecoderStepContext& ctx,
                               LengthControlMode mode,
                               const SignalConfig& cfg) {
  switch (mode) {
    case LengthControlMode::kPre: return pre_embedding(ctx.ratio, cfg);
    case LengthControlMode::kRpe:
      return rpe_embedding(ctx.step, ctx.target_length, cfg);
    case LengthControlMode::kNone:
    case LengthControlMode::kLaam:
      break;
  }
  return EmbeddingVector(static_cast<std::size_t>(cfg.d_model), 0.0);
}

EmbeddingVector compose_decoder_input(std::span<const double> token_emb,
                                      std::span<const double> pos_emb,
                                      const DecoderStepContext& ctx,
                                      LengthControlMode mode,
                                      const SignalConfig& cfg) {
  const auto d = static_cast<std::size_t>(cfg.d_model);
  if (token_emb.size() != d || pos_emb.size() != d) {
    throw ShapeError("compose_decoder_input: expected vectors of length " +
                     std::to_string(d));
  }
  const EmbeddingVector sig = control_signal(ctx, mode, cfg);
  EmbeddingVector out(d);
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = token_emb[i] + (pos_emb[i] + sig[i]);
  }
  return out;
}

Tensor laam_boost(const Tensor& attn_weights, std::int64_t remaining,
                  double boost) {
  Tensor out = attn_weights;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    kernels::laam_boost_inplace(out.row(r), remaining, boost);
  }
  return out;
}

std::int64_t generation_cap(std::int64_t target_length) {
  return std::max(2 * target_length, target_length + 50);
}

// ------------------------------------------------------------ transformer

Transformer::Transformer(ModelConfig cfg, std::uint64_t init_seed)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  declare();
  initialize(init_seed);
}

Transformer::Transformer(ModelConfig cfg, ModelParameters params)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  declare();
  if (params.size() != params_.size()) {
    throw ShapeError("parameter count " + std::to_string(params.size()) +
                     " does not match architecture (" +
                     std::to_string(params_.size()) + ")");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params.name(i) != params_.name(i) ||
        params[i].rows() != params_[i].rows() ||
        params[i].cols() != params_[i].cols()) {
      throw ShapeError("parameter " + params.name(i) + " " +
                       params[i].shape_string() + " does not match " +
                       params_.name(i) + " " + params_[i].shape_string());
    }
  }
  params_ = std::move(params);
}

void Transformer::declare() {
  const auto d = static_cast<std::size_t>(cfg_.d_model);
  const auto ff = static_cast<std::size_t>(cfg_.d_ff);
  const auto V = static_cast<std::size_t>(cfg_.vocab_size);
  auto idx = [&](std::string name, std::size_t r, std::size_t c) {
    params_.add(std::move(name), r, c);
    return params_.size() - 1;
  };
  auto norm_idx = [&](const std::string& p) {
    NormIdx n;
    n.g = idx(p + ".g", 1, d);
    n.b = idx(p + ".b", 1, d);
    return n;
  };
  auto attn_idx = [&](const std::string& p) {
    AttnIdx a;
    a.q = idx(p + ".q", d, d);
    a.k = idx(p + ".k", d, d);
    a.v = idx(p + ".v", d, d);
    a.o = idx(p + ".o", d, d);
    return a;
  };
  auto ff_idx = [&](const std::string& p) {
    FfIdx f;
    f.w1 = idx(p + ".w1", d, ff);
    f.b1 = idx(p + ".b1", 1, ff);
    f.w2 = idx(p + ".w2", ff, d);
    f.b2 = idx(p + ".b2", 1, d);
    return f;
  };

  tok_emb_ = idx("tok_emb", V, d);
  for (int i = 0; i < cfg_.n_enc_layers; ++i) {
    const std::string p = "enc." + std::to_string(i);
    EncLayer L;
    L.ln1 = norm_idx(p + ".ln1");
    L.attn = attn_idx(p + ".attn");
    L.ln2 = norm_idx(p + ".ln2");
    L.ff = ff_idx(p + ".ff");
    enc_.push_back(L);
  }
  enc_ln_ = norm_idx("enc.ln_f");
  for (int i = 0; i < cfg_.n_dec_layers; ++i) {
    const std::string p = "dec." + std::to_string(i);
    DecLayer L;
    L.ln1 = norm_idx(p + ".ln1");
    L.self_attn = attn_idx(p + ".self_attn");
    L.ln2 = norm_idx(p + ".ln2");
    L.cross_attn = attn_idx(p + ".cross_attn");
    L.ln3 = norm_idx(p + ".ln3");
    L.ff = ff_idx(p + ".ff");
    dec_.push_back(L);
  }
  dec_ln_ = norm_idx("dec.ln_f");
  out_w_ = idx("out.w", d, V);
  out_b_ = idx("out.b", 1, V);
}

void Transformer::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double residual_scale =
      1.0 / std::sqrt(2.0 * (cfg_.n_enc_layers + cfg_.n_dec_layers));
  for (auto& [name, t] : params_) {
    auto ends_with = [&](std::string_view suffix) {
      return name.size() >= suffix.size() &&
             name.compare(name.size() - suffix.size(), suffix.size(),
                          suffix) == 0;
    };
    double std_dev = 0.0;
    double fill = 0.0;
    if (name == "tok_emb") {
      std_dev = 1.0;
    } else if (name == "out.w") {
      std_dev = 0.02;
    } else if (ends_with(".g")) {
      fill = 1.0;
    } else if (ends_with(".b") || ends_with(".b1") || ends_with(".b2")) {
      fill = 0.0;
    } else {
      std_dev = 1.0 / std::sqrt(static_cast<double>(t.rows()));
      if (ends_with(".o") || ends_with(".w2")) std_dev *= residual_scale;
    }
    for (double& v : t.data()) {
      const double x = std_dev > 0.0 ? std_dev * normal(rng) : fill;
      v = static_cast<double>(static_cast<float>(x));
    }
  }
}

std::vector<Var> Transformer::bind(Graph& g, bool trainable) {
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (auto& [name, t] : params_) {
    vars.push_back(trainable ? g.parameter(t) : g.alias(t));
  }
  return vars;
}

Var Transformer::norm(Graph& g, std::span<const Var> bound, const NormIdx& idx,
                      Var x) const {
  return ops::layer_norm(g, x, bound[idx.g], bound[idx.b], cfg_.ln_eps);
}

Var Transformer::feed_forward(Graph& g, std::span<const Var> bound,
                              const FfIdx& idx, Var x) const {
  Var h = ops::add_row(g, ops::matmul(g, x, bound[idx.w1]), bound[idx.b1]);
  h = cfg_.activation == "relu" ? ops::relu(g, h) : ops::gelu(g, h);
  return ops::add_row(g, ops::matmul(g, h, bound[idx.w2]), bound[idx.b2]);
}

Var Transformer::attention(Graph& g, std::span<const Var> bound,
                           const AttnIdx& idx, Var query_in, Var kv_in,
                           const Tensor* mask,
                           std::span<const std::int64_t> laam_remaining) const {
  const auto heads = static_cast<std::size_t>(cfg_.n_heads);
  const std::size_t dh = static_cast<std::size_t>(cfg_.d_model) / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  Var q = ops::matmul(g, query_in, bound[idx.q]);
  Var k = ops::matmul(g, kv_in, bound[idx.k]);
  Var v = ops::matmul(g, kv_in, bound[idx.v]);
  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = ops::slice_cols(g, q, h * dh, dh);
    Var kh = ops::slice_cols(g, k, h * dh, dh);
    Var vh = ops::slice_cols(g, v, h * dh, dh);
    Var scores = ops::scale(g, ops::matmul_bt(g, qh, kh), inv_sqrt);
    Var p = ops::softmax_rows(g, scores, mask);
    if (!laam_remaining.empty()) {
      p = ops::laam_boost(g, p, laam_remaining, cfg_.laam_boost);
    }
    outs.push_back(ops::matmul(g, p, vh));
  }
  Var cat = heads == 1 ? outs[0] : ops::concat_cols(g, outs);
  return ops::matmul(g, cat, bound[idx.o]);
}

Var Transformer::encode(Graph& g, std::span<const Var> bound,
                        std::span<const std::int32_t> source) const {
  if (source.empty()) throw std::invalid_argument("encode: empty source");
  if (source.size() > static_cast<std::size_t>(cfg_.max_positions)) {
    throw std::invalid_argument(
        "encode: source length " + std::to_string(source.size()) +
        " exceeds max_positions " + std::to_string(cfg_.max_positions));
  }
  const auto d = static_cast<std::size_t>(cfg_.d_model);
  Var x = ops::embedding(g, bound[tok_emb_], source);
  if (cfg_.use_positions) {
    Tensor pos(source.size(), d);
    for (std::size_t t = 0; t < source.size(); ++t) {
      auto pe = sinusoidal_pe(static_cast<std::int64_t>(t), cfg_.signal);
      std::copy(pe.begin(), pe.end(), pos.row(t).begin());
    }
    x = ops::add(g, x, g.input(std::move(pos)));
  }
  for (const EncLayer& L : enc_) {
    Var h = norm(g, bound, L.ln1, x);
    x = ops::add(g, x, attention(g, bound, L.attn, h, h, nullptr, {}));
    h = norm(g, bound, L.ln2, x);
    x = ops::add(g, x, feed_forward(g, bound, L.ff, h));
  }
  return norm(g, bound, enc_ln_, x);
}

EmbeddingVector Transformer::decoder_conditioning(
    const DecoderStepContext& ctx) const {
  const auto d = static_cast<std::size_t>(cfg_.d_model);
  EmbeddingVector pos =
      cfg_.use_positions ? sinusoidal_pe(ctx.step, cfg_.signal)
                         : EmbeddingVector(d, 0.0);
  const EmbeddingVector sig = control_signal(ctx, cfg_.mode, cfg_.signal);
  for (std::size_t i = 0; i < d; ++i) pos[i] += sig[i];
  return pos;
}

Var Transformer::decode(Graph& g, std::span<const Var> bound, Var enc_out,
                        std::span<const std::int32_t> inputs,
                        std::span<const DecoderStepContext> contexts) const {
  const std::size_t T = inputs.size();
  if (T == 0) throw std::invalid_argument("decode: empty decoder input");
  if (contexts.size() != T) {
    throw std::invalid_argument("decode: " + std::to_string(contexts.size()) +
                                " contexts for " + std::to_string(T) +
                                " decoder positions");
  }
  if (T > static_cast<std::size_t>(cfg_.max_positions)) {
    throw std::invalid_argument("decode: decoder length exceeds max_positions");
  }
  const auto d = static_cast<std::size_t>(cfg_.d_model);
  Tensor cond(T, d);
  std::vector<std::int64_t> remaining(T);
  for (std::size_t t = 0; t < T; ++t) {
    if (contexts[t].step != static_cast<std::int64_t>(t)) {
      throw std::invalid_argument("decode: context step mismatch at position " +
                                  std::to_string(t));
    }
    auto row = decoder_conditioning(contexts[t]);
    std::copy(row.begin(), row.end(), cond.row(t).begin());
    remaining[t] = contexts[t].remaining;
  }
  Var x = ops::add(g, ops::embedding(g, bound[tok_emb_], inputs),
                   g.input(std::move(cond)));

  Tensor causal(T, T);
  for (std::size_t r = 0; r < T; ++r) {
    for (std::size_t c = r + 1; c < T; ++c) {
      causal(r, c) = -std::numeric_limits<double>::infinity();
    }
  }
  const bool laam = cfg_.mode == LengthControlMode::kLaam;
  for (std::size_t i = 0; i < dec_.size(); ++i) {
    const DecLayer& L = dec_[i];
    Var h = norm(g, bound, L.ln1, x);
    x = ops::add(g, x, attention(g, bound, L.self_attn, h, h, &causal, {}));
    h = norm(g, bound, L.ln2, x);
    const bool boost_here = laam && i + 1 == dec_.size();
    x = ops::add(g, x,
                 attention(g, bound, L.cross_attn, h, enc_out, nullptr,
                           boost_here ? std::span<const std::int64_t>(remaining)
                                      : std::span<const std::int64_t>()));
    h = norm(g, bound, L.ln3, x);
    x = ops::add(g, x, feed_forward(g, bound, L.ff, h));
  }
  x = norm(g, bound, dec_ln_, x);
  return ops::add_row(g, ops::matmul(g, x, bound[out_w_]), bound[out_b_]);
}

Tensor Transformer::encode(std::span<const std::int32_t> source) const {
  Graph g;
  std::vector<Var> bound;
  bound.reserve(params_.size());
  for (const auto& [name, t] : params_) bound.push_back(g.alias(t));
  return g.value(encode(g, bound, source));
}

std::vector<double> Transformer::decode_step(
    std::span<const std::int32_t> prefix, const Tensor& enc_out,
    const DecoderStepContext& ctx) const {
  if (static_cast<std::int64_t>(prefix.size()) != ctx.step) {
    throw std::invalid_argument(
        "decode_step: prefix length " + std::to_string(prefix.size()) +
        " does not match step index " + std::to_string(ctx.step));
  }
  IncrementalDecoder dec(*this, enc_out);
  std::vector<double> logits;
  for (std::int64_t s = 0; s <= ctx.step; ++s) {
    const std::int32_t tok =
        s == 0 ? kBeginId : prefix[static_cast<std::size_t>(s - 1)];
    const DecoderStepContext c =
        s == ctx.step ? ctx : DecoderStepContext::at(s, ctx.target_length);
    logits = dec.step(tok, c);
  }
  return logits;
}

GenerationResult Transformer::generate(std::span<const std::int32_t> source,
                                       std::int64_t target_length,
                                       const DecodeOptions& opts) const {
  if (target_length < 1) {
    throw std::invalid_argument("generate: target length must be >= 1");
  }
  const Tensor enc_out = encode(source);
  IncrementalDecoder dec(*this, enc_out);
  std::mt19937_64 rng(opts.seed);
  const std::int64_t cap = generation_cap(target_length);
  GenerationResult res;
  std::int32_t prev = kBeginId;
  for (std::int64_t t = 0;; ++t) {
    if (t == cap) {
      res.cap_hit = true;
      break;
    }
    std::vector<double> logits =
        dec.step(prev, DecoderStepContext::at(t, target_length));
    std::int32_t next = 0;
    if (opts.policy == DecodePolicy::kGreedy || opts.temperature <= 0.0) {
      next = static_cast<std::int32_t>(
          std::max_element(logits.begin(), logits.end()) - logits.begin());
    } else {
      for (double& v : logits) v /= opts.temperature;
      kernels::softmax_inplace(logits);
      std::discrete_distribution<std::int32_t> pick(logits.begin(),
                                                    logits.end());
      next = pick(rng);
    }
    if (next == kEndId) break;
    res.tokens.push_back(next);
    prev = next;
  }
  return res;
}

// ------------------------------------------------------------ incremental

namespace {

/// out[1 x n] = x[1 x k] * W[k x n]
void vec_mat(std::span<const double> x, const Tensor& w, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double xi = x[i];
    auto wr = w.row(i);
    for (std::size_t j = 0; j < w.cols(); ++j) out[j] += xi * wr[j];
  }
}

}  // namespace

IncrementalDecoder::IncrementalDecoder(const Transformer& model,
                                       const Tensor& enc_out)
    : model_(&model), n_src_(enc_out.rows()) {
  const auto& p = model.params_;
  for (const auto& L : model.dec_) {
    Tensor k, v;
    kernels::gemm(enc_out, p[L.cross_attn.k], k);
    kernels::gemm(enc_out, p[L.cross_attn.v], v);
    cross_k_.push_back(std::move(k));
    cross_v_.push_back(std::move(v));
    self_k_.emplace_back();
    self_v_.emplace_back();
  }
}

std::vector<double> IncrementalDecoder::step(std::int32_t token,
                                             const DecoderStepContext& ctx) {
  const Transformer& m = *model_;
  const ModelConfig& cfg = m.cfg_;
  const auto& p = m.params_;
  if (ctx.step != position_) {
    throw std::invalid_argument("IncrementalDecoder: expected step " +
                                std::to_string(position_) + ", got " +
                                std::to_string(ctx.step));
  }
  if (token < 0 || token >= cfg.vocab_size) {
    throw std::out_of_range("IncrementalDecoder: token id out of range");
  }
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const auto heads = static_cast<std::size_t>(cfg.n_heads);
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t n_self = static_cast<std::size_t>(position_) + 1;

  std::vector<double> x(d);
  {
    const auto cond = m.decoder_conditioning(ctx);
    auto emb = p[m.tok_emb_].row(static_cast<std::size_t>(token));
    for (std::size_t i = 0; i < d; ++i) x[i] = emb[i] + cond[i];
  }
  std::vector<double> h(d), q(d), kk(d), vv(d), cat(d), proj(d);
  auto layer_norm = [&](const Transformer::NormIdx& n) {
    kernels::layer_norm_row(x, p[n.g].data(), p[n.b].data(), cfg.ln_eps, h);
  };
  auto attend = [&](std::span<const double> keys, std::span<const double> vals,
                    std::size_t n, std::int64_t boost_remaining) {
    std::vector<double> w(n);
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const std::size_t off = hd * dh;
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += q[off + c] * keys[j * d + off + c];
        w[j] = s * inv_sqrt;
      }
      kernels::softmax_inplace(w);
      if (boost_remaining >= 0) {
        kernels::laam_boost_inplace(w, boost_remaining, cfg.laam_boost);
      }
      for (std::size_t c = 0; c < dh; ++c) cat[off + c] = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t c = 0; c < dh; ++c) cat[off + c] += w[j] * vals[j * d + off + c];
      }
    }
  };

  const bool laam = cfg.mode == LengthControlMode::kLaam;
  for (std::size_t li = 0; li < m.dec_.size(); ++li) {
    const auto& L = m.dec_[li];
    layer_norm(L.ln1);
    vec_mat(h, p[L.self_attn.q], q);
    vec_mat(h, p[L.self_attn.k], kk);
    vec_mat(h, p[L.self_attn.v], vv);
    auto& K = self_k_[li];
    auto& Vc = self_v_[li];
    K.insert(K.end(), kk.begin(), kk.end());
    Vc.insert(Vc.end(), vv.begin(), vv.end());
    attend(K, Vc, n_self, -1);
    vec_mat(cat, p[L.self_attn.o], proj);
    for (std::size_t i = 0; i < d; ++i) x[i] += proj[i];

    layer_norm(L.ln2);
    vec_mat(h, p[L.cross_attn.q], q);
    const bool boost_here = laam && li + 1 == m.dec_.size();
    attend(cross_k_[li].data(), cross_v_[li].data(), n_src_,
           boost_here ? ctx.remaining : -1);
    vec_mat(cat, p[L.cross_attn.o], proj);
    for (std::size_t i = 0; i < d; ++i) x[i] += proj[i];

    layer_norm(L.ln3);
    const Tensor& w1 = p[L.ff.w1];
    std::vector<double> f(w1.cols());
    vec_mat(h, w1, f);
    const auto& b1 = p[L.ff.b1].data();
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double z = f[i] + b1[i];
      f[i] = cfg.activation == "relu" ? (z > 0.0 ? z : 0.0) : kernels::gelu(z);
    }
    vec_mat(f, p[L.ff.w2], proj);
    const auto& b2 = p[L.ff.b2].data();
    for (std::size_t i = 0; i < d; ++i) x[i] += proj[i] + b2[i];
  }
  layer_norm(m.dec_ln_);
  std::vector<double> logits(static_cast<std::size_t>(cfg.vocab_size));
  vec_mat(h, p[m.out_w_], logits);
  const auto& ob = p[m.out_b_].data();
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += ob[i];
  ++position_;
  return logits;
}

}  // namespace lenctl
