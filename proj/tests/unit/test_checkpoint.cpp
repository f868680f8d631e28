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

#include <doctest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lenctl/checkpoint.hpp"
#include "lenctl/errors.hpp"
#include "lenctl/key_value.hpp"
#include "support/gradcheck.hpp"

using namespace lenctl;
using lenctl::testing::tiny_config;

namespace {

std::string serialize(const Transformer& m) {
  std::ostringstream os;
  write_checkpoint(os, m);
  return os.str();
}

}  // namespace

TEST_CASE("key values") {
  KeyValues kv;
  kv.set("name", std::string("abc"));
  kv.set("x", 0.1);
  kv.set("n", std::int64_t{-42});
  kv.set("flag", true);
  std::ostringstream os;
  kv.write(os);
  std::istringstream is("# comment\n" + os.str());
  const KeyValues back = KeyValues::read(is, false);
  CHECK(back.get_string("name") == "abc");
  CHECK(back.get_double("x") == 0.1);
  CHECK(back.get_int("n") == -42);
  CHECK(back.get_bool("flag"));
  CHECK_THROWS_AS(back.get_int("missing"), FormatError);
  CHECK_THROWS_AS(back.get_int("name"), FormatError);

  std::istringstream bad("a=1\nno equals sign\n");
  try {
    KeyValues::read(bad, false);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("config survives the header") {
  ModelConfig cfg = tiny_config(LengthControlMode::kLaam);
  cfg.laam_boost = 0.75;
  cfg.signal.M = 3.3;
  cfg.signal.noise_enabled = true;
  cfg.signal.rng_seed = 123456789012345ULL;
  cfg.ln_eps = 1e-6;
  cfg.activation = "relu";
  cfg.use_positions = false;
  const ModelConfig back = model_config_from_kv(model_config_to_kv(cfg));
  CHECK(back.d_model == cfg.d_model);
  CHECK(back.n_heads == cfg.n_heads);
  CHECK(back.n_enc_layers == cfg.n_enc_layers);
  CHECK(back.n_dec_layers == cfg.n_dec_layers);
  CHECK(back.d_ff == cfg.d_ff);
  CHECK(back.vocab_size == cfg.vocab_size);
  CHECK(back.max_positions == cfg.max_positions);
  CHECK(back.mode == cfg.mode);
  CHECK(back.laam_boost == cfg.laam_boost);
  CHECK(back.ln_eps == cfg.ln_eps);
  CHECK(back.activation == cfg.activation);
  CHECK(back.use_positions == cfg.use_positions);
  CHECK(back.signal.d_model == cfg.signal.d_model);
  CHECK(back.signal.M == cfg.signal.M);
  CHECK(back.signal.noise_enabled == cfg.signal.noise_enabled);
  CHECK(back.signal.rng_seed == cfg.signal.rng_seed);
}

TEST_CASE("checkpoint layout and bit-exact round trip") {
  Transformer model(tiny_config(LengthControlMode::kPre), 3);
  const std::string bytes = serialize(model);
  CHECK(bytes.rfind("LENCTL1\n", 0) == 0);
  const std::size_t blank = bytes.find("\n\n");
  REQUIRE(blank != std::string::npos);
  const std::size_t payload = bytes.size() - (blank + 2);
  CHECK(payload == 4 * model.parameters().scalar_count());

  // First parameter scalar, little-endian float32.
  const auto* b = reinterpret_cast<const unsigned char*>(bytes.data() + blank + 2);
  const std::uint32_t raw = std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 |
                            std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
  CHECK(std::bit_cast<float>(raw) ==
        static_cast<float>(model.parameters()[0].data()[0]));

  std::istringstream is(bytes);
  const Transformer back = read_checkpoint(is);
  CHECK(serialize(back) == bytes);
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    CHECK(back.parameters().name(i) == model.parameters().name(i));
    CHECK(back.parameters()[i].data() == model.parameters()[i].data());
  }
  const std::vector<std::int32_t> src{4, 5, 6};
  CHECK(back.generate(src, 2).tokens == model.generate(src, 2).tokens);
}

TEST_CASE("checkpoint file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "lenctl_ckpt_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  Transformer model(tiny_config(LengthControlMode::kRpe), 8);
  save_checkpoint(dir / "m.ckpt", model);
  CHECK_FALSE(std::filesystem::exists(dir / "m.ckpt.tmp"));
  const Transformer back = load_checkpoint(dir / "m.ckpt");
  CHECK(serialize(back) == serialize(model));
  std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt checkpoints are rejected") {
  Transformer model(tiny_config(LengthControlMode::kNone), 3);
  const std::string bytes = serialize(model);
  {
    std::istringstream is("LENCTL2" + bytes.substr(7));
    CHECK_THROWS_AS(read_checkpoint(is), FormatError);
  }
  {
    std::istringstream is(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_checkpoint(is), FormatError);
  }
  {
    std::istringstream is(bytes + "xx");
    CHECK_THROWS_AS(read_checkpoint(is), FormatError);
  }
}

TEST_CASE("quantization is idempotent") {
  Transformer model(tiny_config(LengthControlMode::kPre), 3);
  for (double& v : model.parameters()[1].data()) v = 0.1;
  quantize_to_float(model.parameters());
  CHECK(model.parameters()[1].data()[0] == static_cast<double>(0.1f));
  const auto before = serialize(model);
  quantize_to_float(model.parameters());
  CHECK(serialize(model) == before);
}
