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

#include "lenctl/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "lenctl/checkpoint.hpp"
#include "lenctl/errors.hpp"
#include "lenctl/rng.hpp"

namespace lenctl {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(adamw.beta1 >= 0.0 && adamw.beta1 < 1.0) ||
      !(adamw.beta2 >= 0.0 && adamw.beta2 < 1.0)) {
    throw ConfigError("AdamW betas must lie in [0, 1)");
  }
  if (!(adamw.eps > 0.0)) throw ConfigError("AdamW eps must be > 0");
  if (adamw.weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
}

double batch_loss(Transformer& model, std::span<const TrainingExample> batch,
                  const NoiseSource* noise) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  std::size_t total_tokens = 0;
  for (const auto& ex : batch) total_tokens += ex.target.size();
  const SignalConfig& sig = model.config().signal;

  double loss = 0.0;
  for (const auto& ex : batch) {
    const std::vector<std::int32_t> inputs = ex.decoder_input();
    std::vector<DecoderStepContext> contexts;
    contexts.reserve(inputs.size());
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      DecoderStepContext ctx =
          DecoderStepContext::at(static_cast<std::int64_t>(t), ex.l);
      if (noise) ctx.ratio = noisy_ratio(ctx.ratio, sig, (*noise)());
      contexts.push_back(ctx);
    }
    Graph g;
    const std::vector<Var> bound = model.bind(g, /*trainable=*/true);
    Var enc = model.encode(g, bound, ex.source);
    Var logits = model.decode(g, bound, enc, inputs, contexts);
    Var ce = ops::cross_entropy(g, logits, ex.target);
    const double weight = static_cast<double>(ex.target.size()) /
                          static_cast<double>(total_tokens);
    Var weighted = ops::scale(g, ce, weight);
    g.backward(weighted);
    loss += g.value(weighted).data()[0];
  }
  return loss;
}

AdamWState::AdamWState(const ModelParameters& params) {
  for (const auto& [name, t] : params) {
    m.emplace_back(t.size(), 0.0);
    v.emplace_back(t.size(), 0.0);
  }
}

StepInfo adamw_step(ModelParameters& params, AdamWState& state,
                    const TrainConfig& cfg) {
  StepInfo info;
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = params[i];
    if (!t.has_grad()) continue;
    for (double g : t.grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in parameter " +
                           params.name(i) + "; step aborted");
      }
      sq += g * g;
    }
  }
  info.grad_norm = std::sqrt(sq);
  double clip = 1.0;
  if (cfg.grad_clip_norm > 0.0 && info.grad_norm > cfg.grad_clip_norm) {
    clip = cfg.grad_clip_norm / info.grad_norm;
    info.clipped = true;
  }

  ++state.step;
  const auto& a = cfg.adamw;
  const double bc1 = 1.0 - std::pow(a.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(a.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& t = params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    const bool has_grad = t.has_grad();
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double g = has_grad ? t.grad()[k] * clip : 0.0;
      m[k] = a.beta1 * m[k] + (1.0 - a.beta1) * g;
      v[k] = a.beta2 * v[k] + (1.0 - a.beta2) * g * g;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      double p = t.data()[k];
      p -= cfg.lr * a.weight_decay * p;
      p -= cfg.lr * mhat / (std::sqrt(vhat) + a.eps);
      t.data()[k] = static_cast<double>(static_cast<float>(p));
    }
  }
  return info;
}

double trailing_mean_loss(std::span<const LossRecord> losses,
                          std::size_t window) {
  if (losses.empty()) return std::nan("");
  const std::size_t n = std::min(window, losses.size());
  double s = 0.0;
  for (std::size_t i = losses.size() - n; i < losses.size(); ++i) {
    s += losses[i].loss;
  }
  return s / static_cast<double>(n);
}

TrainResult train(std::span<const TrainingExample> corpus,
                  const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const TrainOutputs& outputs) {
  cfg.validate();
  model_cfg.validate();
  if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
  for (const auto& ex : corpus) {
    ex.validate();
    for (std::int32_t id : ex.source) {
      if (id < 0 || id >= model_cfg.vocab_size) {
        throw std::invalid_argument("train: source token id " +
                                    std::to_string(id) + " outside vocab");
      }
    }
  }

  TrainResult result{Transformer(model_cfg, derive_seed(cfg.rng_seed, "init")),
                     {}};
  Transformer& model = result.model;
  model.parameters().set_requires_grad(true);
  AdamWState state(model.parameters());

  std::mt19937_64 order_rng(derive_seed(cfg.rng_seed, "batches"));
  std::mt19937_64 noise_rng(derive_seed(cfg.rng_seed, "noise"));
  std::normal_distribution<double> normal(0.0, 1.0);
  const NoiseSource noise = [&] { return normal(noise_rng); };
  const bool use_noise = cfg.noise_enabled;

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  std::ofstream log;
  if (!outputs.loss_log.empty()) {
    if (outputs.loss_log.has_parent_path()) {
      std::filesystem::create_directories(outputs.loss_log.parent_path());
    }
    log.open(outputs.loss_log, std::ios::trunc);
    if (!log) throw std::runtime_error("cannot open " + outputs.loss_log.string());
    log << "# mode=" << to_string(model_cfg.mode) << " lr=" << cfg.lr
        << " batch_size=" << cfg.batch_size
        << " grad_clip_norm=" << cfg.grad_clip_norm
        << " noise_enabled=" << (use_noise ? "true" : "false")
        << " seed=" << cfg.rng_seed << '\n';
    log << "step,loss,seconds\n";
  }

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<TrainingExample> batch;
  for (std::int64_t step = 1; step <= cfg.steps; ++step) {
    batch.clear();
    while (batch.size() < static_cast<std::size_t>(cfg.batch_size)) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      batch.push_back(corpus[order[cursor++]]);
    }
    model.parameters().zero_grad();
    const double loss =
        batch_loss(model, batch, use_noise ? &noise : nullptr);
    adamw_step(model.parameters(), state, cfg);

    LossRecord rec{step, loss,
                   std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count()};
    result.losses.push_back(rec);
    if (log) log << rec.step << ',' << rec.loss << ',' << rec.seconds << '\n';
    if (outputs.on_step) outputs.on_step(rec);
    if (!outputs.checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
        step % cfg.checkpoint_every == 0) {
      save_checkpoint(outputs.checkpoint_dir /
                          ("step_" + std::to_string(step) + ".ckpt"),
                      model);
    }
  }
  model.parameters().set_requires_grad(false);
  if (!outputs.checkpoint_dir.empty()) {
    save_checkpoint(outputs.checkpoint_dir / "final.ckpt", model);
  }
  return result;
}

}  // namespace lenctl
