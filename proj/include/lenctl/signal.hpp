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
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace lenctl {

// Length-control conditioning signals.
//
// Storage convention: vectors are 0-based. Index a corresponds to the
// 1-based dimension j = a + 1, so for the progress-ratio embedding an even
// storage index holds a sine and an odd storage index holds a cosine, both
// at frequency index floor(j / 2) = (a + 1) / 2.

using EmbeddingVector = std::vector<double>;

struct SignalConfig {
  SignalConfig() = default;
  /// M defaults to d_model / 2.
  explicit SignalConfig(int d_model) : d_model(d_model), M(d_model / 2.0) {}

  int d_model = 64;
  /// Frequency scale of the impatience signal (omega_r = r * M).
  double M = 32.0;
  bool noise_enabled = false;
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError when d_model is odd/too small or M exceeds the
  /// Nyquist ceiling d_model * pi / 2.
  void validate() const;
  double nyquist_ceiling() const;
};

/// Fraction of the target length already generated, always in [0, 1].
class ProgressRatio {
 public:
  ProgressRatio() = default;
  /// Clips into [0, 1].
  explicit ProgressRatio(double value);
  double value() const noexcept { return value_; }

 private:
  double value_ = 0.0;
};

/// min(t / l, 1). Throws std::invalid_argument when l == 0.
ProgressRatio progress_ratio(std::int64_t t, std::int64_t l);

EmbeddingVector pre_embedding(ProgressRatio r, const SignalConfig& cfg);

/// Sinusoidal embedding of the remaining count max(l - i, 0).
EmbeddingVector rpe_embedding(std::int64_t i, std::int64_t l,
                              const SignalConfig& cfg);

/// Standard fixed sinusoidal position embedding.
EmbeddingVector sinusoidal_pe(std::int64_t pos, const SignalConfig& cfg);

/// Clip(r + 2 * delta / d_model, 0, 1) for a given standard-normal draw.
ProgressRatio noisy_ratio(ProgressRatio r, const SignalConfig& cfg,
                          double delta);

/// Per-worker standard normal sampler for ratio noise.
class RatioNoise {
 public:
  explicit RatioNoise(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

ProgressRatio noisy_ratio(ProgressRatio r, const SignalConfig& cfg,
                          RatioNoise& noise);

/// (cos(omega * x), sin(omega * x)).
std::pair<double, double> impatience_signal(double omega, double x);

struct FrequencyReport {
  double f_max = 0.0;
  double sampling_rate = 0.0;  // F_s = d_model / 2
  bool satisfies_nyquist = true;
  std::string message;
};

/// Highest per-unit-ratio frequency of the progress-ratio embedding
/// (reached at r = 1 in the last pair) checked against F_s / 2.
FrequencyReport max_signal_frequency(const SignalConfig& cfg);

}  // namespace lenctl
