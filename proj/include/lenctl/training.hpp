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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "lenctl/corpus.hpp"
#include "lenctl/model.hpp"

namespace lenctl {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct TrainConfig {
  int batch_size = 16;
  std::int64_t steps = 4000;
  double lr = 3e-4;
  AdamWConfig adamw;
  /// Global-norm clip threshold; <= 0 disables clipping.
  double grad_clip_norm = 1.0;
  bool noise_enabled = true;
  std::uint64_t rng_seed = 1;
  /// 0 disables periodic checkpoints.
  std::int64_t checkpoint_every = 0;

  void validate() const;
};

struct LossRecord {
  std::int64_t step = 0;
  double loss = 0.0;
  double seconds = 0.0;
};

/// Standard normal draws for ratio noise; one call per (example, position).
using NoiseSource = std::function<double()>;

/// Teacher-forced mean negative log-likelihood over every target token of
/// the batch (end tokens included). Gradients are accumulated into the
/// parameters' grad buffers (callers zero them first). With `noise`, each
/// decoder position's ratio is perturbed by noisy_ratio.
double batch_loss(Transformer& model, std::span<const TrainingExample> batch,
                  const NoiseSource* noise = nullptr);

struct AdamWState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t step = 0;

  explicit AdamWState(const ModelParameters& params);
};

struct StepInfo {
  double grad_norm = 0.0;
  bool clipped = false;
};

/// Clips the global gradient norm, then applies the bias-corrected AdamW
/// update with decoupled weight decay and rounds parameters to float32.
/// Throws NumericError (parameters untouched) on a non-finite gradient.
StepInfo adamw_step(ModelParameters& params, AdamWState& state,
                    const TrainConfig& cfg);

struct TrainOutputs {
  /// Directory for final.ckpt and periodic step_<n>.ckpt; empty = none.
  std::filesystem::path checkpoint_dir;
  /// Loss log CSV (`step,loss,seconds`); empty = none.
  std::filesystem::path loss_log;
  /// Called after every step.
  std::function<void(const LossRecord&)> on_step;
};

struct TrainResult {
  Transformer model;
  std::vector<LossRecord> losses;
};

/// Deterministic given the seeds: model init, batch order and ratio noise
/// all derive from cfg.rng_seed.
TrainResult train(std::span<const TrainingExample> corpus,
                  const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const TrainOutputs& outputs = {});

/// Mean of the last `window` logged losses.
double trailing_mean_loss(std::span<const LossRecord> losses,
                          std::size_t window);

}  // namespace lenctl
