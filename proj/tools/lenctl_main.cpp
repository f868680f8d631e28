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

// lenctl command-line entry point.
//
//   lenctl gen        synthetic corpus generation
//   lenctl train      teacher-forced training
//   lenctl generate   single-example decoding
//   lenctl eval       length-fidelity and ROUGE reports
//   lenctl signal     CSV dumps of the conditioning signals
//   lenctl experiment gen -> train x modes -> eval x policies
//
// Exit codes: 0 success, 1 stage failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lenctl/checkpoint.hpp"
#include "lenctl/corpus.hpp"
#include "lenctl/evaluation.hpp"
#include "lenctl/experiment.hpp"
#include "lenctl/model.hpp"
#include "lenctl/signal.hpp"
#include "lenctl/training.hpp"

namespace fs = std::filesystem;
using namespace lenctl;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct GenArgs {
  std::string task = "prefix_copy";
  CorpusSpec spec;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string name = "corpus.jsonl";
};

struct TrainArgs {
  std::string corpus;
  std::size_t n_validation = 0;
  std::size_t n_test = 0;
  std::string mode = "pre";
  ModelConfig model;
  double M = -1.0;
  TrainConfig train;
  std::uint64_t seed = 1;
  std::string out_dir = "run";
};

struct GenerateArgs {
  std::string checkpoint;
  std::string source;
  std::string corpus;
  std::size_t index = 0;
  std::int64_t length = 0;
  std::string policy = "greedy";
  double temperature = 1.0;
  std::uint64_t seed = 1;
};

struct EvalArgs {
  std::string checkpoint;
  std::string compare;
  std::string name = "a";
  std::string compare_name = "b";
  std::string corpus;
  std::string split = "all";
  std::size_t n_validation = 0;
  std::size_t n_test = 0;
  std::string policy = "reference";
  std::string task = "prefix_copy";
  EvalOptions opts;
  std::uint64_t seed = 1;
  std::string out_dir = "eval";
};

struct SignalArgs {
  std::string dump = "pre";
  int d_model = 64;
  double M = -1.0;
  int grid = 11;
  std::int64_t length = 20;
  int x_grid = 101;
  std::string out;
};

struct ExperimentArgs {
  std::string plan;
  std::vector<std::string> set;
  std::uint64_t seed = 1;
  std::string out_dir = "experiment";
  int workers = 1;
  bool quiet = false;
};

std::vector<std::int32_t> parse_ids(const std::string& text) {
  std::vector<std::int32_t> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const long v = std::stol(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad token id '" + item + "'");
    ids.push_back(static_cast<std::int32_t>(v));
  }
  return ids;
}

std::vector<TrainingExample> select_split(std::vector<TrainingExample> all,
                                          const std::string& which,
                                          std::size_t n_val, std::size_t n_test) {
  if (which == "all") return all;
  CorpusSplit split = split_corpus(std::move(all), n_val, n_test);
  if (which == "train") return std::move(split.train);
  if (which == "validation") return std::move(split.validation);
  if (which == "test") return std::move(split.test);
  throw std::invalid_argument("unknown split '" + which + "'");
}

std::ostream& out_stream(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  file.open(p, std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open " + path);
  return file;
}

// ------------------------------------------------------------------ gen

void run_gen(GenArgs a) {
  a.spec.task = parse_task(a.task);
  a.spec.rng_seed = a.seed;
  a.spec.validate();
  const fs::path dir = resolve_output_dir(a.out_dir);
  fs::create_directories(dir);
  const fs::path final_path = dir / a.name;
  const fs::path tmp_dir = dir / "tmp";
  fs::create_directories(tmp_dir);
  const fs::path tmp_path = tmp_dir / a.name;
  write_corpus(tmp_path, generate_corpus(a.spec));
  fs::rename(tmp_path, final_path);
  std::error_code ec;
  fs::remove(tmp_dir, ec);  // only when empty
  std::cout << final_path.string() << '\n';
}

// ---------------------------------------------------------------- train

void run_train(TrainArgs a) {
  a.model.mode = parse_mode(a.mode);
  a.model.signal = SignalConfig(a.model.d_model);
  if (a.M >= 0.0) a.model.signal.M = a.M;
  a.train.rng_seed = a.seed;
  const auto corpus = select_split(read_corpus(fs::path(a.corpus)), "train",
                                   a.n_validation, a.n_test);
  const fs::path dir = resolve_output_dir(a.out_dir);
  const fs::path tmp = dir / "tmp";
  fs::remove_all(tmp);
  TrainOutputs outputs;
  outputs.checkpoint_dir = tmp;
  outputs.loss_log = tmp / "loss.csv";
  const std::int64_t every = std::max<std::int64_t>(1, a.train.steps / 20);
  outputs.on_step = [every, steps = a.train.steps](const LossRecord& r) {
    if (r.step % every == 0 || r.step == steps) {
      std::fprintf(stderr, "step %lld loss %.4f %.1fs\n",
                   static_cast<long long>(r.step), r.loss, r.seconds);
    }
  };
  train(corpus, a.model, a.train, outputs);
  for (const auto& entry : fs::directory_iterator(tmp)) {
    const fs::path target = dir / entry.path().filename();
    fs::remove_all(target);
    fs::rename(entry.path(), target);
  }
  fs::remove_all(tmp);
  std::cout << (dir / "final.ckpt").string() << '\n';
}

// ------------------------------------------------------------- generate

void run_generate(const GenerateArgs& a) {
  const Transformer model = load_checkpoint(a.checkpoint);
  std::vector<std::int32_t> source;
  std::int64_t l = a.length;
  if (!a.source.empty()) {
    source = parse_ids(a.source);
  } else if (!a.corpus.empty()) {
    const auto corpus = read_corpus(fs::path(a.corpus));
    if (a.index >= corpus.size()) throw std::out_of_range("--index beyond corpus size");
    source = corpus[a.index].source;
    if (l == 0) l = corpus[a.index].l;
  } else {
    throw std::invalid_argument("one of --source or --corpus is required");
  }
  if (l < 1) throw std::invalid_argument("--length must be >= 1");
  DecodeOptions opts;
  if (a.policy == "greedy") {
    opts.policy = DecodePolicy::kGreedy;
  } else if (a.policy == "sample") {
    opts.policy = DecodePolicy::kSample;
  } else {
    throw std::invalid_argument("unknown decode policy '" + a.policy + "'");
  }
  opts.temperature = a.temperature;
  opts.seed = a.seed;
  const GenerationResult res = model.generate(source, l, opts);
  std::cout << "length=" << res.tokens.size() << " target=" << l
            << " cap_hit=" << (res.cap_hit ? "true" : "false") << "\ntokens=";
  for (std::size_t i = 0; i < res.tokens.size(); ++i) {
    std::cout << (i ? "," : "") << res.tokens[i];
  }
  std::cout << '\n';
}

// ----------------------------------------------------------------- eval

void run_eval(EvalArgs a) {
  a.opts.policy = parse_policy(a.policy);
  a.opts.task = parse_task(a.task);
  a.opts.seed = a.seed;
  const auto examples = select_split(read_corpus(fs::path(a.corpus)), a.split,
                                     a.n_validation, a.n_test);
  const fs::path dir = resolve_output_dir(a.out_dir);
  const fs::path tmp = dir / "tmp";
  fs::remove_all(tmp);

  auto evaluate = [&](const std::string& ckpt, const std::string& name) {
    const Transformer model = load_checkpoint(ckpt);
    const auto records = run_generation(model, examples, a.opts);
    const auto report = summarize(records, a.opts);
    write_reports(a.compare.empty() ? tmp : tmp / name, records, report);
    std::printf("%s: mae %.4f sd %.4f outlier_rate %.4f r1 %.4f r2 %.4f rL %.4f\n",
                name.c_str(), report.mae.mae, report.mae.sd, report.outlier_rate,
                report.rouge.r1, report.rouge.r2, report.rouge.rl);
    return abs_errors(records);
  };
  const auto errors_a = evaluate(a.checkpoint, a.name);
  if (!a.compare.empty()) {
    if (a.name == a.compare_name) throw std::invalid_argument("--name and --compare-name must differ");
    const auto errors_b = evaluate(a.compare, a.compare_name);
    const std::vector<TTestRow> rows{
        {a.name, a.compare_name, paired_t_test(errors_a, errors_b)}};
    write_ttest(tmp / "ttest.csv", rows);
    std::printf("t %.6g p %.6g\n", rows[0].result.t, rows[0].result.p);
  }
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(tmp)) {
    const fs::path target = dir / entry.path().filename();
    fs::remove_all(target);
    fs::rename(entry.path(), target);
  }
  fs::remove_all(tmp);
}

// --------------------------------------------------------------- signal

void run_signal(const SignalArgs& a) {
  SignalConfig cfg(a.d_model);
  if (a.M >= 0.0) cfg.M = a.M;
  cfg.validate();
  if (a.grid < 1) throw std::invalid_argument("--grid must be >= 1");
  std::ofstream file;
  std::ostream& os = out_stream(a.out, file);
  char buf[128];
  auto ratio_at = [&](int i) { return a.grid == 1 ? 0.0 : static_cast<double>(i) / (a.grid - 1); };
  if (a.dump == "pre") {
    os << "ratio,dim,value\n";
    for (int i = 0; i < a.grid; ++i) {
      const double r = ratio_at(i);
      const auto v = pre_embedding(ProgressRatio(r), cfg);
      for (int j = 1; j <= a.d_model; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g\n", r, j, v[j - 1]);
        os << buf;
      }
    }
  } else if (a.dump == "rpe") {
    os << "step,dim,value\n";
    for (std::int64_t i = 0; i <= a.length; ++i) {
      const auto v = rpe_embedding(i, a.length, cfg);
      for (int j = 1; j <= a.d_model; ++j) {
        std::snprintf(buf, sizeof buf, "%lld,%d,%.17g\n", static_cast<long long>(i), j, v[j - 1]);
        os << buf;
      }
    }
  } else if (a.dump == "impatience") {
    if (a.x_grid < 2) throw std::invalid_argument("--x-grid must be >= 2");
    os << "omega,x,cos,sin\n";
    for (int i = 0; i < a.grid; ++i) {
      const double omega = ratio_at(i) * cfg.M;
      for (int k = 0; k < a.x_grid; ++k) {
        const double x = static_cast<double>(k) / (a.x_grid - 1);
        const auto [c, s] = impatience_signal(omega, x);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", omega, x, c, s);
        os << buf;
      }
    }
  } else {
    throw std::invalid_argument("unknown dump '" + a.dump + "'");
  }
}

// ----------------------------------------------------------- experiment

void run_experiment_cmd(const ExperimentArgs& a) {
  KeyValues kv;
  if (!a.plan.empty()) {
    std::ifstream is(a.plan);
    if (!is) throw std::runtime_error("cannot open plan " + a.plan);
    kv = KeyValues::read(is, false);
  }
  if (!kv.contains("seed")) kv.set("seed", std::to_string(a.seed));
  if (!kv.contains("output_dir")) kv.set("output_dir", a.out_dir);
  if (!kv.contains("workers")) kv.set("workers", std::int64_t{a.workers});
  for (const auto& item : a.set) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("--set expects key=value, got '" + item + "'");
    }
    kv.set(item.substr(0, eq), item.substr(eq + 1));
  }
  const ExperimentPlan plan = ExperimentPlan::from_kv(kv);
  ExperimentLog log;
  if (!a.quiet) log = [](std::string_view s) { std::cerr << s << '\n'; };
  const auto res = run_experiment(plan, log);
  std::cout << (res.output_dir / "comparison.csv").string() << '\n';
}

// ------------------------------------------------------------ wiring

void add_gen(CLI::App& app, GenArgs& a) {
  auto* c = app.add_subcommand("gen", "Generate a synthetic corpus");
  c->add_option("--task", a.task, "prefix_copy or marked_extract")
      ->check(CLI::IsMember({"prefix_copy", "marked_extract"}));
  c->add_option("--vocab-size", a.spec.vocab_size, "Vocabulary size including reserved ids");
  c->add_option("--n", a.spec.n_examples, "Number of examples");
  c->add_option("--source-min", a.spec.source_min, "Minimum source length");
  c->add_option("--source-max", a.spec.source_max, "Maximum source length");
  c->add_option("--length-mean", a.spec.length.mean, "Mean target length");
  c->add_option("--length-sd", a.spec.length.sd, "Target length standard deviation");
  c->add_option("--length-min", a.spec.length.min, "Minimum target length");
  c->add_option("--length-max", a.spec.length.max, "Maximum target length");
  c->add_option("--marker-rate", a.spec.marker_rate,
                "marked_extract: probability a content token is marked");
  c->add_option("--seed", a.seed, "Random seed");
  c->add_option("--out-dir", a.out_dir, "Output directory (LENCTL_OUT overrides)");
  c->add_option("--name", a.name, "Corpus file name");
}

void add_model_flags(CLI::App* c, TrainArgs& a) {
  c->add_option("--mode", a.mode, "Length control: none, rpe, pre or laam")
      ->check(CLI::IsMember({"none", "rpe", "pre", "laam"}));
  c->add_option("--d-model", a.model.d_model, "Model width");
  c->add_option("--n-heads", a.model.n_heads, "Attention heads");
  c->add_option("--enc-layers", a.model.n_enc_layers, "Encoder layers");
  c->add_option("--dec-layers", a.model.n_dec_layers, "Decoder layers");
  c->add_option("--d-ff", a.model.d_ff, "Feed-forward width");
  c->add_option("--vocab-size", a.model.vocab_size, "Vocabulary size");
  c->add_option("--max-positions", a.model.max_positions, "Longest supported sequence");
  c->add_option("--M", a.M, "Ratio signal frequency scale (negative: d_model/2)");
  c->add_option("--laam-boost", a.model.laam_boost, "LAAM boost factor");
  c->add_option("--activation", a.model.activation, "gelu or relu")
      ->check(CLI::IsMember({"gelu", "relu"}));
  c->add_option("--ln-eps", a.model.ln_eps, "Layer-norm epsilon");
}

void add_train(CLI::App& app, TrainArgs& a) {
  auto* c = app.add_subcommand("train", "Train a model with teacher forcing");
  c->add_option("--corpus", a.corpus, "Corpus file")->required();
  c->add_option("--n-validation", a.n_validation, "Examples held out for validation");
  c->add_option("--n-test", a.n_test, "Examples held out for testing");
  add_model_flags(c, a);
  c->add_option("--batch-size", a.train.batch_size, "Examples per step");
  c->add_option("--steps", a.train.steps, "Optimizer steps");
  c->add_option("--lr", a.train.lr, "Learning rate");
  c->add_option("--beta1", a.train.adamw.beta1, "AdamW beta1");
  c->add_option("--beta2", a.train.adamw.beta2, "AdamW beta2");
  c->add_option("--eps", a.train.adamw.eps, "AdamW epsilon");
  c->add_option("--weight-decay", a.train.adamw.weight_decay, "AdamW decoupled weight decay");
  c->add_option("--clip", a.train.grad_clip_norm, "Global gradient-norm clip (<= 0 disables)");
  c->add_option("--noise", a.train.noise_enabled, "Ratio noise during training (true or false)");
  c->add_option("--checkpoint-every", a.train.checkpoint_every, "Steps between checkpoints (0: final only)");
  c->add_option("--seed", a.seed, "Random seed");
  c->add_option("--out-dir", a.out_dir, "Output directory (LENCTL_OUT overrides)");
}

void add_generate(CLI::App& app, GenerateArgs& a) {
  auto* c = app.add_subcommand("generate", "Decode one source with a target length");
  c->add_option("--checkpoint", a.checkpoint, "Checkpoint file")->required();
  c->add_option("--source", a.source, "Comma-separated source token ids");
  c->add_option("--corpus", a.corpus, "Corpus file to take the source from");
  c->add_option("--index", a.index, "Example index within --corpus");
  c->add_option("--length", a.length, "Target length (0: the example's own)");
  c->add_option("--policy", a.policy, "greedy or sample")
      ->check(CLI::IsMember({"greedy", "sample"}));
  c->add_option("--temperature", a.temperature, "Sampling temperature");
  c->add_option("--seed", a.seed, "Sampling seed");
}

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* c = app.add_subcommand("eval", "Evaluate length fidelity and ROUGE");
  c->add_option("--checkpoint", a.checkpoint, "Checkpoint file")->required();
  c->add_option("--compare", a.compare, "Second checkpoint for a paired t-test");
  c->add_option("--name", a.name, "Report name of --checkpoint when comparing");
  c->add_option("--compare-name", a.compare_name, "Report name of --compare");
  c->add_option("--corpus", a.corpus, "Corpus file")->required();
  c->add_option("--split", a.split, "all, train, validation or test")
      ->check(CLI::IsMember({"all", "train", "validation", "test"}));
  c->add_option("--n-validation", a.n_validation, "Validation examples in the split");
  c->add_option("--n-test", a.n_test, "Test examples in the split");
  c->add_option("--policy", a.policy, "reference or random_ood")
      ->check(CLI::IsMember({"reference", "random_ood"}));
  c->add_option("--task", a.task, "Task used to build references")
      ->check(CLI::IsMember({"prefix_copy", "marked_extract"}));
  c->add_option("--ood-min", a.opts.ood_min, "Smallest random_ood target length");
  c->add_option("--ood-max", a.opts.ood_max, "Largest random_ood target length");
  c->add_option("--bucket-width", a.opts.bucket_width, "Target-length bucket width");
  c->add_option("--outlier-threshold", a.opts.outlier_threshold, "Absolute error counted as outlier");
  c->add_option("--histogram-width", a.opts.histogram_width, "Length histogram bin width");
  c->add_option("--seed", a.seed, "Seed for random_ood lengths");
  c->add_option("--workers", a.opts.workers, "Generation threads")->check(CLI::PositiveNumber);
  c->add_option("--out-dir", a.out_dir, "Output directory (LENCTL_OUT overrides)");
}

void add_signal(CLI::App& app, SignalArgs& a) {
  auto* c = app.add_subcommand("signal", "Dump conditioning signals as CSV");
  c->add_option("--dump", a.dump, "pre, rpe or impatience")
      ->check(CLI::IsMember({"pre", "rpe", "impatience"}));
  c->add_option("--d-model", a.d_model, "Embedding width");
  c->add_option("--M", a.M, "Frequency scale (negative: d_model/2)");
  c->add_option("--grid", a.grid, "Ratio grid points in [0, 1]");
  c->add_option("--length", a.length, "rpe: target length");
  c->add_option("--x-grid", a.x_grid, "impatience: x grid points in [0, 1]");
  c->add_option("--out", a.out, "Output file (default: stdout)");
}

void add_experiment(CLI::App& app, ExperimentArgs& a) {
  auto* c = app.add_subcommand("experiment", "Run gen, train, eval and comparison");
  c->add_option("--plan", a.plan, "Plan file of key=value lines");
  c->add_option("--set", a.set, "Plan override key=value (repeatable)");
  c->add_option("--seed", a.seed, "Seed for every stage");
  c->add_option("--out-dir", a.out_dir, "Output directory (LENCTL_OUT overrides)");
  c->add_option("--workers", a.workers, "Generation threads")->check(CLI::PositiveNumber);
  c->add_flag("--quiet", a.quiet, "Suppress progress lines (default: off)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Length-controlled sequence generation toolkit", "lenctl"};
  app.option_defaults()->always_capture_default();
  app.get_formatter()->column_width(44);
  app.require_subcommand(1);
  app.fallthrough(false);

  GenArgs gen;
  TrainArgs train_args;
  GenerateArgs generate;
  EvalArgs eval;
  SignalArgs signal;
  ExperimentArgs experiment;
  add_gen(app, gen);
  add_train(app, train_args);
  add_generate(app, generate);
  add_eval(app, eval);
  add_signal(app, signal);
  add_experiment(app, experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "gen") run_gen(gen);
    else if (name == "train") run_train(train_args);
    else if (name == "generate") run_generate(generate);
    else if (name == "eval") run_eval(eval);
    else if (name == "signal") run_signal(signal);
    else run_experiment_cmd(experiment);
  } catch (const StageError& e) {
    std::cerr << "lenctl " << name << ": " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "lenctl " << name << ": [" << name << "] " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
