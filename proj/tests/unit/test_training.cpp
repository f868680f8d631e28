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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lenctl/checkpoint.hpp"
#include "lenctl/errors.hpp"
#include "lenctl/training.hpp"
#include "support/gradcheck.hpp"

using namespace lenctl;
using lenctl::testing::tiny_batch;
using lenctl::testing::tiny_config;

namespace {

ModelParameters scalar_params(double value) {
  ModelParameters p;
  p.add("w", 1, 1).data()[0] = value;
  p.set_requires_grad(true);
  return p;
}

std::string checkpoint_bytes(const Transformer& m) {
  std::ostringstream os;
  write_checkpoint(os, m);
  return os.str();
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.adamw.beta2 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("adamw: zero gradient and zero decay leave parameters unchanged") {
  ModelParameters p = scalar_params(0.75);
  AdamWState state(p);
  TrainConfig cfg;
  cfg.adamw.weight_decay = 0.0;
  for (int i = 0; i < 5; ++i) {
    p.zero_grad();
    adamw_step(p, state, cfg);
  }
  CHECK(p[0].data()[0] == 0.75);
}

TEST_CASE("adamw: first step with constant unit gradient moves by lr") {
  ModelParameters p = scalar_params(0.5);
  AdamWState state(p);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.adamw.weight_decay = 0.0;
  p[0].grad()[0] = 1.0;
  adamw_step(p, state, cfg);
  const double expected = 0.5 - 1e-3 * (1.0 / (1.0 + 1e-8));
  CHECK(p[0].data()[0] == static_cast<double>(static_cast<float>(expected)));
}

TEST_CASE("adamw: decoupled decay shrinks by (1 - lr * wd) per step") {
  ModelParameters p = scalar_params(1.0);
  AdamWState state(p);
  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.adamw.weight_decay = 0.5;
  double expected = 1.0;
  for (int i = 0; i < 4; ++i) {
    p.zero_grad();
    adamw_step(p, state, cfg);
    expected = static_cast<float>(expected * (1.0 - 0.01 * 0.5));
    CHECK(p[0].data()[0] == expected);
  }
}

TEST_CASE("adamw: clipping and non-finite gradients") {
  ModelParameters p;
  p.add("a", 1, 2);
  p.set_requires_grad(true);
  AdamWState state(p);
  TrainConfig cfg;
  p[0].grad() = {3.0, 4.0};
  const StepInfo info = adamw_step(p, state, cfg);
  CHECK(info.grad_norm == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(info.clipped);

  p[0].grad() = {std::nan(""), 1.0};
  const auto before = p[0].data();
  CHECK_THROWS_AS(adamw_step(p, state, cfg), NumericError);
  CHECK(p[0].data() == before);
}

TEST_CASE("loss at initialization is near ln(vocab)") {
  for (int vocab : {8, 64}) {
    ModelConfig cfg = tiny_config(LengthControlMode::kPre);
    cfg.vocab_size = vocab;
    Transformer model(cfg, 21);
    CorpusSpec spec;
    spec.vocab_size = vocab;
    spec.n_examples = 8;
    spec.source_min = 12;
    spec.source_max = 16;
    spec.length = {8.0, 2.0, 3, 12};
    const auto batch = generate_corpus(spec);
    const double loss = batch_loss(model, batch);
    CHECK(std::fabs(loss - std::log(vocab)) < 0.05 * std::log(vocab));
  }
}

TEST_CASE("batch loss is a mean over tokens") {
  Transformer model(tiny_config(LengthControlMode::kRpe), 4);
  const auto ex = tiny_batch();
  const std::vector<TrainingExample> one{ex[0]};
  const std::vector<TrainingExample> two{ex[0], ex[0]};
  CHECK(batch_loss(model, one) == doctest::Approx(batch_loss(model, two)).epsilon(1e-14));
  CHECK_THROWS(batch_loss(model, std::vector<TrainingExample>{}));
}

TEST_CASE("zero noise equals the exact path") {
  Transformer model(tiny_config(LengthControlMode::kPre), 4);
  const auto batch = tiny_batch();
  const NoiseSource zero = [] { return 0.0; };
  CHECK(batch_loss(model, batch) == batch_loss(model, batch, &zero));
  const NoiseSource loud = [] { return 3.0; };
  CHECK(batch_loss(model, batch) != batch_loss(model, batch, &loud));
}

TEST_CASE("training is deterministic and writes its logs") {
  const auto dir = std::filesystem::temp_directory_path() / "lenctl_train_test";
  std::filesystem::remove_all(dir);
  CorpusSpec spec;
  spec.vocab_size = 11;
  spec.n_examples = 20;
  spec.source_min = 10;
  spec.source_max = 12;
  spec.length = {5.0, 2.0, 2, 10};
  const auto corpus = generate_corpus(spec);
  TrainConfig cfg;
  cfg.steps = 6;
  cfg.batch_size = 3;
  cfg.checkpoint_every = 3;
  TrainOutputs out;
  out.checkpoint_dir = dir / "a";
  out.loss_log = dir / "a" / "loss.csv";
  const auto a = train(corpus, tiny_config(LengthControlMode::kPre), cfg, out);
  const auto b = train(corpus, tiny_config(LengthControlMode::kPre), cfg);
  CHECK(checkpoint_bytes(a.model) == checkpoint_bytes(b.model));
  REQUIRE(a.losses.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(a.losses[i].loss == b.losses[i].loss);

  CHECK(std::filesystem::exists(dir / "a" / "step_3.ckpt"));
  CHECK(std::filesystem::exists(dir / "a" / "step_6.ckpt"));
  CHECK(checkpoint_bytes(load_checkpoint(dir / "a" / "final.ckpt")) ==
        checkpoint_bytes(a.model));
  std::ifstream log(dir / "a" / "loss.csv");
  std::string header, columns, first;
  std::getline(log, header);
  std::getline(log, columns);
  std::getline(log, first);
  CHECK(header.rfind("# mode=pre", 0) == 0);
  CHECK(header.find("grad_clip_norm=1") != std::string::npos);
  CHECK(columns == "step,loss,seconds");
  CHECK(first.rfind("1,", 0) == 0);

  TrainConfig other = cfg;
  other.rng_seed = 2;
  const auto c = train(corpus, tiny_config(LengthControlMode::kPre), other);
  CHECK(checkpoint_bytes(c.model) != checkpoint_bytes(a.model));

  const auto none = train(corpus, tiny_config(LengthControlMode::kNone), cfg);
  CHECK(none.losses.size() == 6);
  std::filesystem::remove_all(dir);
}

TEST_CASE("trailing mean") {
  const std::vector<LossRecord> l{{1, 4.0, 0}, {2, 2.0, 0}, {3, 1.0, 0}};
  CHECK(trailing_mean_loss(l, 2) == 1.5);
  CHECK(trailing_mean_loss(l, 10) == doctest::Approx(7.0 / 3.0));
}
