# Copyright 2026 The lenctl Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Smoke tests for the Python bindings."""

import csv
import math

import pytest

import lenctl


def tiny_model_config(mode):
    cfg = lenctl.ModelConfig()
    cfg.d_model = 16
    cfg.n_heads = 2
    cfg.n_enc_layers = 1
    cfg.n_dec_layers = 1
    cfg.d_ff = 32
    cfg.vocab_size = 11
    cfg.max_positions = 64
    cfg.mode = mode
    cfg.signal.d_model = 16
    cfg.signal.M = 8
    return cfg


def test_signal_values():
    cfg = lenctl.SignalConfig(4)
    cfg.M = 2
    assert lenctl.progress_ratio(1, 4) == pytest.approx(0.25)
    e = lenctl.pre_embedding(1.0, cfg)
    assert len(e) == 4
    assert e[0] == 0.0
    assert e[1] == pytest.approx(math.cos(1.0), abs=1e-12)
    assert lenctl.rpe_embedding(3, 4, cfg) == lenctl.sinusoidal_pe(1, cfg)
    assert lenctl.rpe_embedding(29, 30, cfg)[0] == pytest.approx(math.sin(1.0), abs=1e-12)
    assert lenctl.max_signal_frequency(lenctl.SignalConfig(8)).satisfies_nyquist


def test_invalid_config_raises():
    cfg = lenctl.SignalConfig(8)
    cfg.M = 100
    with pytest.raises(ValueError):
        cfg.validate()
    with pytest.raises(ValueError):
        lenctl.parse_mode("bogus")


def test_corpus_round_trip(tmp_path):
    spec = lenctl.CorpusSpec()
    spec.vocab_size = 11
    spec.n_examples = 20
    spec.source_min = 10
    spec.source_max = 12
    spec.length.mean = 5
    spec.length.sd = 2
    spec.length.min = 2
    spec.length.max = 10
    examples = lenctl.generate_corpus(spec)
    assert len(examples) == 20
    for ex in examples:
        assert len(ex.target) == ex.l + 1
        assert ex.target[:-1] == ex.source[: ex.l]
    path = tmp_path / "c.jsonl"
    lenctl.write_corpus(path, examples)
    assert lenctl.read_corpus(path) == examples


def test_model_encode_generate_and_checkpoint(tmp_path):
    model = lenctl.Transformer(tiny_model_config(lenctl.LengthControlMode.PRE), 7)
    src = [5, 9, 4, 7, 10, 6]
    enc = model.encode(src)
    assert enc.shape == (6, 16)
    out = model.generate(src, 4)
    assert len(out.tokens) <= lenctl.generation_cap(4)
    path = tmp_path / "m.ckpt"
    model.save(path)
    with open(path, "rb") as f:
        assert f.read(7) == b"LENCTL1"
    again = lenctl.Transformer.load(path)
    assert again.parameter_count == model.parameter_count
    assert again.generate(src, 4).tokens == out.tokens


def test_training_reduces_loss(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    batch = [lenctl.prefix_copy_example([5, 9, 4, 7, 10, 6], 3),
             lenctl.prefix_copy_example([8, 4, 6, 9, 5], 4)]
    tc = lenctl.TrainConfig()
    tc.steps = 30
    tc.batch_size = 2
    tc.lr = 1e-2
    tc.noise_enabled = False
    model, losses = lenctl.train(batch, tiny_model_config(lenctl.LengthControlMode.PRE), tc)
    assert len(losses) == 30
    assert losses[-1].loss < losses[0].loss
    assert lenctl.batch_loss(model, batch) == pytest.approx(losses[-1].loss, rel=0.5)
    assert list(tmp_path.iterdir()) == []
    tc.steps = 2
    lenctl.train(batch, tiny_model_config(lenctl.LengthControlMode.PRE), tc, tmp_path / "run")
    assert (tmp_path / "run" / "final.ckpt").exists()
    assert (tmp_path / "run" / "loss.csv").exists()


def test_metrics():
    s = lenctl.rouge([1, 2, 3, 4], [1, 2, 3, 5])
    assert s.r1 == pytest.approx(0.75)
    t = lenctl.paired_t_test([2.0, 4.0, 6.0, 8.0], [1.0, 2.0, 3.0, 4.0])
    assert t.t == pytest.approx(3.872983346207417, rel=1e-9)
    assert t.p == pytest.approx(0.030466291662170977, rel=1e-6)
    mae = lenctl.length_mae([10, 20], [11, 23])
    assert mae.mae == pytest.approx(2.0)
    buckets = lenctl.bucket_report([305, 310, 320], [305, 310, 330], 25, 5.0)
    assert [(b.lo, b.hi) for b in buckets] == [(300, 325)]
    assert buckets[0].outlier_rate == pytest.approx(1 / 3)


def test_run_experiment(tmp_path):
    plan = {
        "seed": 3, "output_dir": str(tmp_path / "exp"),
        "corpus.vocab_size": 11, "corpus.n_examples": 24,
        "corpus.source_min": 10, "corpus.source_max": 12,
        "corpus.length.mean": 5, "corpus.length.sd": 2,
        "corpus.length.min": 2, "corpus.length.max": 10,
        "split.test": 6, "runs": "pre,none",
        "model.d_model": 16, "model.n_heads": 2, "model.n_enc_layers": 1,
        "model.n_dec_layers": 1, "model.d_ff": 32, "model.max_positions": 64,
        "train.steps": 3, "train.batch_size": 2,
        "eval.ood_min": 12, "eval.ood_max": 20,
        "ood.examples": 5, "ood.source_min": 20, "ood.source_max": 24,
    }
    out = lenctl.run_experiment(plan)
    with open(out / "comparison.csv") as f:
        rows = list(csv.DictReader(f))
    assert [(r["mode"], r["policy"]) for r in rows] == [
        ("pre", "reference"), ("none", "reference"),
        ("pre", "random_ood"), ("none", "random_ood")]
    assert not (out / "tmp").exists()
