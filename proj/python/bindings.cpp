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

// Python bindings for the lenctl core.

#include <optional>

#include <pybind11/pybind11.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lenctl/checkpoint.hpp"
#include "lenctl/corpus.hpp"
#include "lenctl/errors.hpp"
#include "lenctl/evaluation.hpp"
#include "lenctl/experiment.hpp"
#include "lenctl/model.hpp"
#include "lenctl/signal.hpp"
#include "lenctl/training.hpp"

namespace py = pybind11;
using namespace lenctl;

namespace {

py::array_t<double> to_array(const Tensor& t) {
  py::array_t<double> out({t.rows(), t.cols()});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

ExperimentPlan plan_from_dict(const py::dict& d) {
  KeyValues kv;
  for (const auto& [k, v] : d) {
    kv.set(py::str(k).cast<std::string>(),
           py::isinstance<py::bool_>(v) ? std::string(v.cast<bool>() ? "true" : "false")
                                        : py::str(v).cast<std::string>());
  }
  return ExperimentPlan::from_kv(kv);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Length-controlled sequence generation: signals, model, training, evaluation.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);

  // signal
  py::class_<SignalConfig>(m, "SignalConfig")
      .def(py::init<>())
      .def(py::init<int>(), py::arg("d_model"))
      .def_readwrite("d_model", &SignalConfig::d_model)
      .def_readwrite("M", &SignalConfig::M)
      .def_readwrite("noise_enabled", &SignalConfig::noise_enabled)
      .def_readwrite("rng_seed", &SignalConfig::rng_seed)
      .def("validate", &SignalConfig::validate)
      .def("nyquist_ceiling", &SignalConfig::nyquist_ceiling);

  py::class_<FrequencyReport>(m, "FrequencyReport")
      .def_readonly("f_max", &FrequencyReport::f_max)
      .def_readonly("sampling_rate", &FrequencyReport::sampling_rate)
      .def_readonly("satisfies_nyquist", &FrequencyReport::satisfies_nyquist)
      .def_readonly("message", &FrequencyReport::message);

  m.def("progress_ratio", [](std::int64_t t, std::int64_t l) { return progress_ratio(t, l).value(); },
        py::arg("t"), py::arg("l"));
  m.def("pre_embedding",
        [](double r, const SignalConfig& cfg) { return pre_embedding(ProgressRatio(r), cfg); },
        py::arg("ratio"), py::arg("cfg"));
  m.def("rpe_embedding", &rpe_embedding, py::arg("i"), py::arg("l"), py::arg("cfg"));
  m.def("sinusoidal_pe", &sinusoidal_pe, py::arg("pos"), py::arg("cfg"));
  m.def("noisy_ratio",
        [](double r, const SignalConfig& cfg, double delta) {
          return noisy_ratio(ProgressRatio(r), cfg, delta).value();
        },
        py::arg("ratio"), py::arg("cfg"), py::arg("delta"));
  m.def("impatience_signal", &impatience_signal, py::arg("omega"), py::arg("x"));
  m.def("max_signal_frequency", &max_signal_frequency, py::arg("cfg"));

  // model
  py::enum_<LengthControlMode>(m, "LengthControlMode")
      .value("NONE", LengthControlMode::kNone)
      .value("RPE", LengthControlMode::kRpe)
      .value("PRE", LengthControlMode::kPre)
      .value("LAAM", LengthControlMode::kLaam);
  m.def("parse_mode", &parse_mode, py::arg("text"));

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("d_model", &ModelConfig::d_model)
      .def_readwrite("n_heads", &ModelConfig::n_heads)
      .def_readwrite("n_enc_layers", &ModelConfig::n_enc_layers)
      .def_readwrite("n_dec_layers", &ModelConfig::n_dec_layers)
      .def_readwrite("d_ff", &ModelConfig::d_ff)
      .def_readwrite("vocab_size", &ModelConfig::vocab_size)
      .def_readwrite("max_positions", &ModelConfig::max_positions)
      .def_readwrite("mode", &ModelConfig::mode)
      .def_readwrite("signal", &ModelConfig::signal)
      .def_readwrite("laam_boost", &ModelConfig::laam_boost)
      .def_readwrite("ln_eps", &ModelConfig::ln_eps)
      .def_readwrite("activation", &ModelConfig::activation)
      .def_readwrite("use_positions", &ModelConfig::use_positions)
      .def("validate", &ModelConfig::validate);

  m.def("laam_boost",
        [](const std::vector<double>& row, std::int64_t remaining, double boost) {
          return laam_boost(Tensor(1, row.size(), row), remaining, boost).data();
        },
        py::arg("weights"), py::arg("remaining"), py::arg("boost"));
  m.def("generation_cap", &generation_cap, py::arg("target_length"));

  py::class_<GenerationResult>(m, "GenerationResult")
      .def_readonly("tokens", &GenerationResult::tokens)
      .def_readonly("cap_hit", &GenerationResult::cap_hit);

  py::class_<Transformer>(m, "Transformer")
      .def(py::init<ModelConfig, std::uint64_t>(), py::arg("config"), py::arg("seed") = 0)
      .def_property_readonly("config", &Transformer::config)
      .def_property_readonly("parameter_count",
                             [](const Transformer& t) { return t.parameters().scalar_count(); })
      .def("parameter_names",
           [](const Transformer& t) {
             std::vector<std::string> names;
             for (std::size_t i = 0; i < t.parameters().size(); ++i) {
               names.push_back(t.parameters().name(i));
             }
             return names;
           })
      .def("encode",
           [](const Transformer& t, const std::vector<std::int32_t>& source) {
             return to_array(t.encode(source));
           },
           py::arg("source"))
      .def("generate",
           [](const Transformer& t, const std::vector<std::int32_t>& source,
              std::int64_t length, bool sample, double temperature, std::uint64_t seed) {
             DecodeOptions opts{sample ? DecodePolicy::kSample : DecodePolicy::kGreedy,
                                temperature, seed};
             py::gil_scoped_release release;
             return t.generate(source, length, opts);
           },
           py::arg("source"), py::arg("length"), py::arg("sample") = false,
           py::arg("temperature") = 1.0, py::arg("seed") = 0)
      .def("save", [](const Transformer& t, const std::filesystem::path& p) { save_checkpoint(p, t); },
           py::arg("path"))
      .def_static("load", &load_checkpoint, py::arg("path"));

  // corpus
  py::enum_<CorpusTask>(m, "CorpusTask")
      .value("PREFIX_COPY", CorpusTask::kPrefixCopy)
      .value("MARKED_EXTRACT", CorpusTask::kMarkedExtract);

  py::class_<LengthDistribution>(m, "LengthDistribution")
      .def(py::init<>())
      .def_readwrite("mean", &LengthDistribution::mean)
      .def_readwrite("sd", &LengthDistribution::sd)
      .def_readwrite("min", &LengthDistribution::min)
      .def_readwrite("max", &LengthDistribution::max);

  py::class_<CorpusSpec>(m, "CorpusSpec")
      .def(py::init<>())
      .def_readwrite("task", &CorpusSpec::task)
      .def_readwrite("vocab_size", &CorpusSpec::vocab_size)
      .def_readwrite("n_examples", &CorpusSpec::n_examples)
      .def_readwrite("source_min", &CorpusSpec::source_min)
      .def_readwrite("source_max", &CorpusSpec::source_max)
      .def_readwrite("length", &CorpusSpec::length)
      .def_readwrite("marker_rate", &CorpusSpec::marker_rate)
      .def_readwrite("rng_seed", &CorpusSpec::rng_seed)
      .def("validate", &CorpusSpec::validate);

  py::class_<TrainingExample>(m, "TrainingExample")
      .def(py::init<>())
      .def(py::init([](std::vector<std::int32_t> s, std::vector<std::int32_t> t, std::int64_t l) {
             TrainingExample ex{std::move(s), std::move(t), l};
             ex.validate();
             return ex;
           }),
           py::arg("source"), py::arg("target"), py::arg("l"))
      .def_readwrite("source", &TrainingExample::source)
      .def_readwrite("target", &TrainingExample::target)
      .def_readwrite("l", &TrainingExample::l)
      .def("__eq__", [](const TrainingExample& a, const TrainingExample& b) { return a == b; });

  m.def("prefix_copy_example", &prefix_copy_example, py::arg("source"), py::arg("l"));
  m.def("marked_extract_example", &marked_extract_example, py::arg("source"), py::arg("l"));
  m.def("generate_corpus", &generate_corpus, py::arg("spec"));
  m.def("write_corpus",
        [](const std::filesystem::path& p, const std::vector<TrainingExample>& ex) { write_corpus(p, ex); },
        py::arg("path"), py::arg("examples"));
  m.def("read_corpus", [](const std::filesystem::path& p) { return read_corpus(p); }, py::arg("path"));

  // training
  py::class_<AdamWConfig>(m, "AdamWConfig")
      .def(py::init<>())
      .def_readwrite("beta1", &AdamWConfig::beta1)
      .def_readwrite("beta2", &AdamWConfig::beta2)
      .def_readwrite("eps", &AdamWConfig::eps)
      .def_readwrite("weight_decay", &AdamWConfig::weight_decay);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("steps", &TrainConfig::steps)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("adamw", &TrainConfig::adamw)
      .def_readwrite("grad_clip_norm", &TrainConfig::grad_clip_norm)
      .def_readwrite("noise_enabled", &TrainConfig::noise_enabled)
      .def_readwrite("rng_seed", &TrainConfig::rng_seed)
      .def_readwrite("checkpoint_every", &TrainConfig::checkpoint_every);

  py::class_<LossRecord>(m, "LossRecord")
      .def_readonly("step", &LossRecord::step)
      .def_readonly("loss", &LossRecord::loss)
      .def_readonly("seconds", &LossRecord::seconds);

  m.def("batch_loss",
        [](Transformer& model, const std::vector<TrainingExample>& batch) {
          return batch_loss(model, batch);
        },
        py::arg("model"), py::arg("batch"));
  m.def("train",
        [](const std::vector<TrainingExample>& corpus, const ModelConfig& mc,
           const TrainConfig& tc, const std::optional<std::filesystem::path>& out_dir) {
          TrainOutputs outputs;
          if (out_dir) {
            outputs.checkpoint_dir = *out_dir;
            outputs.loss_log = *out_dir / "loss.csv";
          }
          std::optional<TrainResult> res;
          {
            py::gil_scoped_release release;
            res.emplace(train(corpus, mc, tc, outputs));
          }
          return py::make_tuple(std::move(res->model), std::move(res->losses));
        },
        py::arg("corpus"), py::arg("model_config"), py::arg("train_config"),
        py::arg("out_dir") = py::none());

  // evaluation
  py::class_<RougeScores>(m, "RougeScores")
      .def_readonly("r1", &RougeScores::r1)
      .def_readonly("r2", &RougeScores::r2)
      .def_readonly("rL", &RougeScores::rl);
  py::class_<TTestResult>(m, "TTestResult")
      .def_readonly("t", &TTestResult::t)
      .def_readonly("p", &TTestResult::p)
      .def_readonly("n", &TTestResult::n)
      .def_readonly("mean_diff", &TTestResult::mean_diff)
      .def_readonly("zero_variance", &TTestResult::zero_variance);
  py::class_<MaeSummary>(m, "MaeSummary")
      .def_readonly("mae", &MaeSummary::mae)
      .def_readonly("sd", &MaeSummary::sd)
      .def_readonly("count", &MaeSummary::count);
  py::class_<BucketReport>(m, "BucketReport")
      .def_readonly("lo", &BucketReport::lo)
      .def_readonly("hi", &BucketReport::hi)
      .def_readonly("mae", &BucketReport::mae)
      .def_readonly("sd", &BucketReport::sd)
      .def_readonly("count", &BucketReport::count)
      .def_readonly("outlier_rate", &BucketReport::outlier_rate);

  m.def("rouge",
        [](const std::vector<std::int32_t>& c, const std::vector<std::int32_t>& r) { return rouge(c, r); },
        py::arg("candidate"), py::arg("reference"));
  m.def("paired_t_test",
        [](const std::vector<double>& a, const std::vector<double>& b) { return paired_t_test(a, b); },
        py::arg("a"), py::arg("b"));

  auto records_of = [](const std::vector<std::int64_t>& targets,
                       const std::vector<std::int64_t>& generated) {
    if (targets.size() != generated.size()) {
      throw std::invalid_argument("targets and generated lengths differ in size");
    }
    std::vector<GenerationRecord> recs(targets.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      recs[i].id = static_cast<std::int64_t>(i);
      recs[i].target_length = targets[i];
      recs[i].generated_length = generated[i];
    }
    return recs;
  };
  m.def("length_mae",
        [records_of](const std::vector<std::int64_t>& t, const std::vector<std::int64_t>& g) {
          return length_mae(records_of(t, g));
        },
        py::arg("targets"), py::arg("generated"));
  m.def("bucket_report",
        [records_of](const std::vector<std::int64_t>& t, const std::vector<std::int64_t>& g,
                     std::int64_t width, double threshold) {
          return bucket_report(records_of(t, g), width, threshold);
        },
        py::arg("targets"), py::arg("generated"), py::arg("bucket_width") = 25,
        py::arg("outlier_threshold") = 20.0);

  // experiment
  m.def("run_experiment",
        [](const py::dict& plan) {
          const ExperimentPlan p = plan_from_dict(plan);
          py::gil_scoped_release release;
          return run_experiment(p).output_dir;
        },
        py::arg("plan"),
        "Runs gen, train, eval and comparison for a plan given as key/value pairs; "
        "returns the output directory.");
}
