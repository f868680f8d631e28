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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lenctl/signal.hpp"
#include "lenctl/tensor.hpp"

namespace lenctl {

// Reserved token ids shared by the corpus and the model.
inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kBeginId = 1;
inline constexpr std::int32_t kEndId = 2;
inline constexpr std::int32_t kMarkerId = 3;
inline constexpr std::int32_t kFirstContentId = 4;

enum class LengthControlMode { kNone, kRpe, kPre, kLaam };

std::string_view to_string(LengthControlMode mode);
/// Accepts none|rpe|pre|laam (case-insensitive).
LengthControlMode parse_mode(std::string_view text);

struct ModelConfig {
  int d_model = 64;
  int n_heads = 4;
  int n_enc_layers = 2;
  int n_dec_layers = 2;
  int d_ff = 128;
  int vocab_size = 64;
  int max_positions = 1024;
  LengthControlMode mode = LengthControlMode::kPre;
  SignalConfig signal{64};
  double laam_boost = 1.0;
  double ln_eps = 1e-5;
  /// "gelu" (tanh approximation) or "relu".
  std::string activation = "gelu";
  /// Adds the fixed sinusoidal P_t to encoder and decoder inputs.
  bool use_positions = true;

  /// Throws ConfigError on any invariant violation.
  void validate() const;
};

/// Named parameters in declared architectural order.
class ModelParameters {
 public:
  Tensor& add(std::string name, std::size_t rows, std::size_t cols);

  std::size_t size() const noexcept { return entries_.size(); }
  Tensor& operator[](std::size_t i) { return entries_[i].second; }
  const Tensor& operator[](std::size_t i) const { return entries_[i].second; }
  const std::string& name(std::size_t i) const { return entries_[i].first; }
  std::size_t index_of(std::string_view name) const;
  Tensor& at(std::string_view name) { return entries_[index_of(name)].second; }
  const Tensor& at(std::string_view name) const {
    return entries_[index_of(name)].second;
  }
  std::size_t scalar_count() const;
  void zero_grad();
  void set_requires_grad(bool on);

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

/// Per-step conditioning inputs of the decoder.
struct DecoderStepContext {
  std::int64_t step = 0;
  std::int64_t target_length = 1;
  ProgressRatio ratio;
  std::int64_t remaining = 0;

  /// Exact context: ratio = progress_ratio(t, l), remaining = max(l - t, 0).
  static DecoderStepContext at(std::int64_t t, std::int64_t l);
};

/// E + (P + s) where s is the mode's conditioning signal for `ctx`
/// (progress-ratio embedding, countdown embedding, or nothing).
EmbeddingVector compose_decoder_input(std::span<const double> token_emb,
                                      std::span<const double> pos_emb,
                                      const DecoderStepContext& ctx,
                                      LengthControlMode mode,
                                      const SignalConfig& cfg);

/// Conditioning signal alone (zero vector for NONE and LAAM).
EmbeddingVector control_signal(const DecoderStepContext& ctx,
                               LengthControlMode mode,
                               const SignalConfig& cfg);

/// Multiplies the min(remaining, n) largest weights of a probability row by
/// (1 + boost) and renormalizes.
Tensor laam_boost(const Tensor& attn_weights, std::int64_t remaining,
                  double boost);

enum class DecodePolicy { kGreedy, kSample };

struct DecodeOptions {
  DecodePolicy policy = DecodePolicy::kGreedy;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

struct GenerationResult {
  std::vector<std::int32_t> tokens;  // excludes the end token
  bool cap_hit = false;
};

/// max(2l, l + 50)
std::int64_t generation_cap(std::int64_t target_length);

class Transformer;

/// Key/value caches for one source sequence; feeds one token per step.
class IncrementalDecoder {
 public:
  IncrementalDecoder(const Transformer& model, const Tensor& enc_out);
  /// Consumes the decoder input token for position ctx.step and returns the
  /// next-token logits. Steps must be fed in order 0, 1, 2, ...
  std::vector<double> step(std::int32_t token, const DecoderStepContext& ctx);
  std::int64_t position() const noexcept { return position_; }

 private:
  const Transformer* model_;
  std::size_t n_src_;
  std::int64_t position_ = 0;
  std::vector<std::vector<double>> self_k_, self_v_;  // per layer, row-major
  std::vector<Tensor> cross_k_, cross_v_;  // per layer, fixed
};

/// The toy encoder-decoder. Pre-norm blocks, shared token embedding, fixed
/// sinusoidal positions, untied output projection.
class Transformer {
 public:
  Transformer(ModelConfig cfg, std::uint64_t init_seed);
  Transformer(ModelConfig cfg, ModelParameters params);

  const ModelConfig& config() const noexcept { return cfg_; }
  ModelParameters& parameters() noexcept { return params_; }
  const ModelParameters& parameters() const noexcept { return params_; }

  /// Binds every parameter to the graph in declared order. Trainable leaves
  /// when `trainable`, read-only aliases otherwise.
  std::vector<Var> bind(Graph& g, bool trainable);

  /// Encoder forward. Throws on empty or overlong input.
  Var encode(Graph& g, std::span<const Var> bound,
             std::span<const std::int32_t> source) const;

  /// Teacher-forced decoder forward. `inputs[t]` is the decoder input at
  /// position t and `contexts[t]` its conditioning. Returns logits [T x V].
  Var decode(Graph& g, std::span<const Var> bound, Var enc_out,
             std::span<const std::int32_t> inputs,
             std::span<const DecoderStepContext> contexts) const;

  /// Inference-only encoder output.
  Tensor encode(std::span<const std::int32_t> source) const;

  /// Logits for position t = prefix.size() given the generated prefix.
  /// Recomputes from scratch; does not depend on any cached state.
  std::vector<double> decode_step(std::span<const std::int32_t> prefix,
                                  const Tensor& enc_out,
                                  const DecoderStepContext& ctx) const;

  GenerationResult generate(std::span<const std::int32_t> source,
                            std::int64_t target_length,
                            const DecodeOptions& opts = {}) const;

  /// Conditioning row P_t + s_t for decoder position t.
  EmbeddingVector decoder_conditioning(const DecoderStepContext& ctx) const;

 private:
  friend class IncrementalDecoder;

  struct AttnIdx {
    std::size_t q, k, v, o;
  };
  struct NormIdx {
    std::size_t g, b;
  };
  struct FfIdx {
    std::size_t w1, b1, w2, b2;
  };
  struct EncLayer {
    NormIdx ln1;
    AttnIdx attn;
    NormIdx ln2;
    FfIdx ff;
  };
  struct DecLayer {
    NormIdx ln1;
    AttnIdx self_attn;
    NormIdx ln2;
    AttnIdx cross_attn;
    NormIdx ln3;
    FfIdx ff;
  };

  void declare();
  void initialize(std::uint64_t seed);
  Var attention(Graph& g, std::span<const Var> bound, const AttnIdx& idx,
                Var query_in, Var kv_in, const Tensor* mask,
                std::span<const std::int64_t> laam_remaining) const;
  Var feed_forward(Graph& g, std::span<const Var> bound, const FfIdx& idx,
                   Var x) const;
  Var norm(Graph& g, std::span<const Var> bound, const NormIdx& idx,
           Var x) const;

  ModelConfig cfg_;
  ModelParameters params_;
  std::size_t tok_emb_ = 0;
  std::vector<EncLayer> enc_;
  NormIdx enc_ln_{};
  std::vector<DecLayer> dec_;
  NormIdx dec_ln_{};
  std::size_t out_w_ = 0, out_b_ = 0;
};

}  // namespace lenctl
