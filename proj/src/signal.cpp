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

#include "lenctl/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "lenctl/errors.hpp"

namespace lenctl {

double SignalConfig::nyquist_ceiling() const {
  return d_model * std::numbers::pi / 2.0;
}

void SignalConfig::validate() const {
  if (d_model < 2 || d_model % 2 != 0) {
    throw ConfigError("d_model must be even and >= 2, got " +
                      std::to_string(d_model));
  }
  if (!std::isfinite(M) || M < 0.0) {
    throw ConfigError("M must be finite and non-negative");
  }
  if (M > nyquist_ceiling()) {
    std::ostringstream os;
    os << "M = " << M << " exceeds the Nyquist ceiling d_model*pi/2 = "
       << nyquist_ceiling();
    throw ConfigError(os.str());
  }
}

ProgressRatio::ProgressRatio(double value)
    : value_(std::clamp(value, 0.0, 1.0)) {}

ProgressRatio progress_ratio(std::int64_t t, std::int64_t l) {
  if (l < 1) {
    throw std::invalid_argument("invalid target length " + std::to_string(l) +
                                " (must be >= 1)");
  }
  if (t < 0) throw std::invalid_argument("negative step index");
  if (t >= l) return ProgressRatio(1.0);
  return ProgressRatio(static_cast<double>(t) / static_cast<double>(l));
}

EmbeddingVector pre_embedding(ProgressRatio r, const SignalConfig& cfg) {
  cfg.validate();
  const int d = cfg.d_model;
  const double omega = r.value() * cfg.M;
  EmbeddingVector out(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    const int j = a + 1;
    const double arg = 2.0 * omega * (j / 2) / d;
    out[static_cast<std::size_t>(a)] = (j % 2 == 0) ? std::cos(arg)
                                                    : std::sin(arg);
  }
  return out;
}

namespace {

EmbeddingVector sinusoid(double value, int d) {
  EmbeddingVector out(static_cast<std::size_t>(d));
  for (int k = 0; k < d / 2; ++k) {
    const double denom = std::pow(10000.0, 2.0 * k / d);
    out[static_cast<std::size_t>(2 * k)] = std::sin(value / denom);
    out[static_cast<std::size_t>(2 * k + 1)] = std::cos(value / denom);
  }
  return out;
}

}  // namespace

EmbeddingVector rpe_embedding(std::int64_t i, std::int64_t l,
                              const SignalConfig& cfg) {
  cfg.validate();
  const std::int64_t countdown = std::max<std::int64_t>(l - i, 0);
  return sinusoid(static_cast<double>(countdown), cfg.d_model);
}

EmbeddingVector sinusoidal_pe(std::int64_t pos, const SignalConfig& cfg) {
  cfg.validate();
  if (pos < 0) throw std::invalid_argument("negative position");
  return sinusoid(static_cast<double>(pos), cfg.d_model);
}

ProgressRatio noisy_ratio(ProgressRatio r, const SignalConfig& cfg,
                          double delta) {
  return ProgressRatio(r.value() + 2.0 * delta / cfg.d_model);
}

ProgressRatio noisy_ratio(ProgressRatio r, const SignalConfig& cfg,
                          RatioNoise& noise) {
  return noisy_ratio(r, cfg, noise());
}

std::pair<double, double> impatience_signal(double omega, double x) {
  if (omega < 0.0) throw std::invalid_argument("pulsation must be >= 0");
  return {std::cos(omega * x), std::sin(omega * x)};
}

FrequencyReport max_signal_frequency(const SignalConfig& cfg) {
  if (cfg.d_model < 2 || cfg.d_model % 2 != 0) cfg.validate();
  FrequencyReport rep;
  // The highest pair index floor(j/2) = d_model/2 gives argument omega_r.
  rep.f_max = cfg.M / (2.0 * std::numbers::pi);
  rep.sampling_rate = cfg.d_model / 2.0;
  rep.satisfies_nyquist = cfg.M <= cfg.nyquist_ceiling();
  if (!rep.satisfies_nyquist) {
    std::ostringstream os;
    os << "F_max = " << rep.f_max << " exceeds F_s/2 = "
       << rep.sampling_rate / 2.0 << " (M above d_model*pi/2)";
    rep.message = os.str();
  }
  return rep;
}

}  // namespace lenctl
