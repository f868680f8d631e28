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

#include "lenctl/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lenctl/errors.hpp"

namespace lenctl {

KeyValues model_config_to_kv(const ModelConfig& cfg) {
  KeyValues kv;
  kv.set("d_model", std::int64_t{cfg.d_model});
  kv.set("n_heads", std::int64_t{cfg.n_heads});
  kv.set("n_enc_layers", std::int64_t{cfg.n_enc_layers});
  kv.set("n_dec_layers", std::int64_t{cfg.n_dec_layers});
  kv.set("d_ff", std::int64_t{cfg.d_ff});
  kv.set("vocab_size", std::int64_t{cfg.vocab_size});
  kv.set("max_positions", std::int64_t{cfg.max_positions});
  kv.set("mode", std::string(to_string(cfg.mode)));
  kv.set("laam_boost", cfg.laam_boost);
  kv.set("ln_eps", cfg.ln_eps);
  kv.set("activation", cfg.activation);
  kv.set("use_positions", cfg.use_positions);
  kv.set("signal.d_model", std::int64_t{cfg.signal.d_model});
  kv.set("signal.M", cfg.signal.M);
  kv.set("signal.noise_enabled", cfg.signal.noise_enabled);
  kv.set("signal.rng_seed", std::to_string(cfg.signal.rng_seed));
  return kv;
}

ModelConfig model_config_from_kv(const KeyValues& kv) {
  ModelConfig cfg;
  cfg.d_model = static_cast<int>(kv.get_int("d_model"));
  cfg.n_heads = static_cast<int>(kv.get_int("n_heads"));
  cfg.n_enc_layers = static_cast<int>(kv.get_int("n_enc_layers"));
  cfg.n_dec_layers = static_cast<int>(kv.get_int("n_dec_layers"));
  cfg.d_ff = static_cast<int>(kv.get_int("d_ff"));
  cfg.vocab_size = static_cast<int>(kv.get_int("vocab_size"));
  cfg.max_positions = static_cast<int>(kv.get_int("max_positions"));
  cfg.mode = parse_mode(kv.get_string("mode"));
  cfg.laam_boost = kv.get_double("laam_boost");
  cfg.ln_eps = kv.get_double("ln_eps");
  cfg.activation = kv.get_string("activation");
  cfg.use_positions = kv.get_bool("use_positions");
  cfg.signal.d_model = static_cast<int>(kv.get_int("signal.d_model"));
  cfg.signal.M = kv.get_double("signal.M");
  cfg.signal.noise_enabled = kv.get_bool("signal.noise_enabled");
  cfg.signal.rng_seed = kv.get_uint("signal.rng_seed");
  cfg.validate();
  return cfg;
}

void quantize_to_float(ModelParameters& params) {
  for (auto& [name, t] : params) {
    for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
  }
}

void write_checkpoint(std::ostream& os, const Transformer& model) {
  os << kCheckpointMagic << '\n';
  KeyValues kv = model_config_to_kv(model.config());
  kv.set("param_count",
         static_cast<std::int64_t>(model.parameters().scalar_count()));
  kv.write(os);
  os << '\n';
  std::string buf;
  for (const auto& [name, t] : model.parameters()) {
    buf.resize(t.size() * 4);
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(t.data()[i]));
      if constexpr (std::endian::native == std::endian::big) {
        bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) |
               ((bits >> 8) & 0xff00u) | (bits >> 24);
      }
      std::memcpy(buf.data() + 4 * i, &bits, 4);
    }
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!os) throw std::runtime_error("checkpoint write failed");
}

Transformer read_checkpoint(std::istream& is) {
  std::string magic;
  if (!std::getline(is, magic) || magic != kCheckpointMagic) {
    throw FormatError("not a checkpoint (missing " + std::string(kCheckpointMagic) +
                      " header)", 1);
  }
  const KeyValues kv = KeyValues::read(is, /*stop_at_blank=*/true, 1);
  ModelConfig cfg = model_config_from_kv(kv);
  Transformer model(cfg, std::uint64_t{0});
  ModelParameters& params = model.parameters();
  if (kv.contains("param_count") &&
      static_cast<std::size_t>(kv.get_int("param_count")) != params.scalar_count()) {
    throw FormatError("param_count does not match the declared architecture");
  }
  std::string buf;
  for (auto& [name, t] : params) {
    buf.resize(t.size() * 4);
    is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(is.gcount()) != buf.size()) {
      throw FormatError("truncated parameter data at " + name);
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::uint32_t bits = 0;
      std::memcpy(&bits, buf.data() + 4 * i, 4);
      if constexpr (std::endian::native == std::endian::big) {
        bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) |
               ((bits >> 8) & 0xff00u) | (bits >> 24);
      }
      t.data()[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after parameter data");
  }
  return model;
}

void save_checkpoint(const std::filesystem::path& path,
                     const Transformer& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string());
    write_checkpoint(os, model);
  }
  std::filesystem::rename(tmp, path);
}

Transformer load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  return read_checkpoint(is);
}

}  // namespace lenctl
