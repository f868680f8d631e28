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

#include "lenctl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lenctl/checkpoint.hpp"
#include "lenctl/errors.hpp"
#include "lenctl/rng.hpp"

namespace lenctl {

namespace {

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ' && c != '\t') {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ',';
    out += s;
  }
  return out;
}

/// Reads optional keys into existing fields, leaving defaults untouched.
class Reader {
 public:
  explicit Reader(const KeyValues& kv) : kv_(kv) {}

  void get(std::string_view key, int& v) const {
    if (kv_.contains(key)) v = static_cast<int>(kv_.get_int(key));
  }
  void get(std::string_view key, std::int64_t& v) const {
    if (kv_.contains(key)) v = kv_.get_int(key);
  }
  void get(std::string_view key, std::uint64_t& v) const {
    if (kv_.contains(key)) v = kv_.get_uint(key);
  }
  void get(std::string_view key, double& v) const {
    if (kv_.contains(key)) v = kv_.get_double(key);
  }
  void get(std::string_view key, bool& v) const {
    if (kv_.contains(key)) v = kv_.get_bool(key);
  }
  void get(std::string_view key, std::string& v) const {
    if (kv_.contains(key)) v = kv_.get_string(key);
  }
  bool has(std::string_view key) const { return kv_.contains(key); }
  std::string str(std::string_view key) const { return kv_.get_string(key); }

 private:
  const KeyValues& kv_;
};

/// Entries whose key starts with `prefix`, with the prefix removed.
KeyValues with_prefix(const KeyValues& kv, std::string_view prefix) {
  KeyValues out;
  for (const auto& [k, v] : kv.entries()) {
    if (k.size() > prefix.size() && k.compare(0, prefix.size(), prefix) == 0) {
      out.set(k.substr(prefix.size()), v);
    }
  }
  return out;
}

void add_prefixed(KeyValues& dst, std::string_view prefix, const KeyValues& src) {
  for (const auto& [k, v] : src.entries()) dst.set(std::string(prefix) + k, v);
}

void overlay(KeyValues& dst, const KeyValues& src) {
  for (const auto& [k, v] : src.entries()) dst.set(k, v);
}

ModelConfig parse_model(const KeyValues& kv) {
  ModelConfig cfg;
  Reader r(kv);
  r.get("d_model", cfg.d_model);
  cfg.signal = SignalConfig(cfg.d_model);
  r.get("n_heads", cfg.n_heads);
  r.get("n_enc_layers", cfg.n_enc_layers);
  r.get("n_dec_layers", cfg.n_dec_layers);
  r.get("d_ff", cfg.d_ff);
  r.get("vocab_size", cfg.vocab_size);
  r.get("max_positions", cfg.max_positions);
  if (r.has("mode")) cfg.mode = parse_mode(r.str("mode"));
  r.get("laam_boost", cfg.laam_boost);
  r.get("ln_eps", cfg.ln_eps);
  r.get("activation", cfg.activation);
  r.get("use_positions", cfg.use_positions);
  r.get("signal.d_model", cfg.signal.d_model);
  r.get("signal.M", cfg.signal.M);
  r.get("signal.noise_enabled", cfg.signal.noise_enabled);
  r.get("signal.rng_seed", cfg.signal.rng_seed);
  return cfg;
}

KeyValues train_to_kv(const TrainConfig& cfg) {
  KeyValues kv;
  kv.set("batch_size", std::int64_t{cfg.batch_size});
  kv.set("steps", cfg.steps);
  kv.set("lr", cfg.lr);
  kv.set("beta1", cfg.adamw.beta1);
  kv.set("beta2", cfg.adamw.beta2);
  kv.set("eps", cfg.adamw.eps);
  kv.set("weight_decay", cfg.adamw.weight_decay);
  kv.set("grad_clip_norm", cfg.grad_clip_norm);
  kv.set("noise_enabled", cfg.noise_enabled);
  kv.set("rng_seed", std::to_string(cfg.rng_seed));
  kv.set("checkpoint_every", cfg.checkpoint_every);
  return kv;
}

TrainConfig parse_train(const KeyValues& kv, std::uint64_t default_seed) {
  TrainConfig cfg;
  cfg.rng_seed = default_seed;
  Reader r(kv);
  r.get("batch_size", cfg.batch_size);
  r.get("steps", cfg.steps);
  r.get("lr", cfg.lr);
  r.get("beta1", cfg.adamw.beta1);
  r.get("beta2", cfg.adamw.beta2);
  r.get("eps", cfg.adamw.eps);
  r.get("weight_decay", cfg.adamw.weight_decay);
  r.get("grad_clip_norm", cfg.grad_clip_norm);
  r.get("noise_enabled", cfg.noise_enabled);
  r.get("rng_seed", cfg.rng_seed);
  r.get("checkpoint_every", cfg.checkpoint_every);
  return cfg;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

/// Per-bucket counts of every run side by side, including the number of
/// non-outlier generations per run.
void write_bucket_comparison(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::vector<BucketReport>>>& runs) {
  std::ostringstream os;
  os << "mode,bucket_lo,bucket_hi,count,non_outlier_count,outlier_rate,mae\n";
  for (const auto& [name, buckets] : runs) {
    for (const auto& b : buckets) {
      const auto outliers = static_cast<std::size_t>(
          std::llround(b.outlier_rate * static_cast<double>(b.count)));
      os << name << ',' << b.lo << ',' << b.hi << ',' << b.count << ','
         << b.count - outliers << ',' << fmt6(b.outlier_rate) << ','
         << fmt6(b.mae) << '\n';
    }
  }
  write_text(path, os.str());
}

template <class F>
auto stage(const std::string& name, const ExperimentLog& log, F&& body) {
  if (log) log("[" + name + "] start");
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

void ExperimentPlan::validate() const {
  if (runs.empty()) throw ConfigError("experiment needs at least one run");
  std::set<std::string> names;
  for (const auto& run : runs) {
    if (run.name.empty()) throw ConfigError("run name must not be empty");
    if (run.name.find_first_of(",/\\ ") != std::string::npos) {
      throw ConfigError("run name '" + run.name + "' has reserved characters");
    }
    if (!names.insert(run.name).second) {
      throw ConfigError("duplicate run name '" + run.name + "'");
    }
    run.model.validate();
    run.train.validate();
    if (run.model.vocab_size < corpus.vocab_size) {
      throw ConfigError("run '" + run.name + "' vocab_size is below the corpus vocabulary");
    }
  }
  if (policies.empty()) throw ConfigError("experiment needs at least one policy");
  if (corpus_path.empty()) corpus.validate();
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (eval.ood_min < 1 || eval.ood_max < eval.ood_min) {
    throw ConfigError("OOD range must satisfy 1 <= min <= max");
  }
  if (ood_examples < 1) throw ConfigError("ood examples must be >= 1");
  if (ood_source_min < 1 || ood_source_max < ood_source_min) {
    throw ConfigError("OOD source range must satisfy 1 <= min <= max");
  }
}

KeyValues ExperimentPlan::to_kv() const {
  KeyValues kv;
  kv.set("seed", std::to_string(seed));
  kv.set("output_dir", output_dir.string());
  kv.set("workers", std::int64_t{workers});
  if (!corpus_path.empty()) kv.set("corpus.path", corpus_path.string());
  kv.set("corpus.task", std::string(to_string(corpus.task)));
  kv.set("corpus.vocab_size", std::int64_t{corpus.vocab_size});
  kv.set("corpus.n_examples", corpus.n_examples);
  kv.set("corpus.source_min", corpus.source_min);
  kv.set("corpus.source_max", corpus.source_max);
  kv.set("corpus.length.mean", corpus.length.mean);
  kv.set("corpus.length.sd", corpus.length.sd);
  kv.set("corpus.length.min", corpus.length.min);
  kv.set("corpus.length.max", corpus.length.max);
  kv.set("corpus.marker_rate", corpus.marker_rate);
  kv.set("corpus.rng_seed", std::to_string(corpus.rng_seed));
  kv.set("split.validation", static_cast<std::int64_t>(n_validation));
  kv.set("split.test", static_cast<std::int64_t>(n_test));
  std::vector<std::string> names;
  for (const auto& run : runs) names.push_back(run.name);
  kv.set("runs", join(names));
  for (const auto& run : runs) {
    add_prefixed(kv, "run." + run.name + ".model.", model_config_to_kv(run.model));
    add_prefixed(kv, "run." + run.name + ".train.", train_to_kv(run.train));
  }
  std::vector<std::string> pol;
  for (auto p : policies) pol.emplace_back(to_string(p));
  kv.set("policies", join(pol));
  kv.set("eval.ood_min", eval.ood_min);
  kv.set("eval.ood_max", eval.ood_max);
  kv.set("eval.seed", std::to_string(eval.seed));
  kv.set("eval.bucket_width", eval.bucket_width);
  kv.set("eval.outlier_threshold", eval.outlier_threshold);
  kv.set("eval.histogram_width", eval.histogram_width);
  kv.set("ood.examples", ood_examples);
  kv.set("ood.source_min", ood_source_min);
  kv.set("ood.source_max", ood_source_max);
  return kv;
}

ExperimentPlan ExperimentPlan::from_kv(const KeyValues& kv) {
  ExperimentPlan plan;
  Reader r(kv);
  r.get("seed", plan.seed);
  std::string out = plan.output_dir.string();
  r.get("output_dir", out);
  plan.output_dir = out;
  r.get("workers", plan.workers);

  std::string corpus_path;
  r.get("corpus.path", corpus_path);
  plan.corpus_path = corpus_path;
  CorpusSpec& c = plan.corpus;
  if (r.has("corpus.task")) c.task = parse_task(r.str("corpus.task"));
  r.get("corpus.vocab_size", c.vocab_size);
  r.get("corpus.n_examples", c.n_examples);
  r.get("corpus.source_min", c.source_min);
  r.get("corpus.source_max", c.source_max);
  r.get("corpus.length.mean", c.length.mean);
  r.get("corpus.length.sd", c.length.sd);
  r.get("corpus.length.min", c.length.min);
  r.get("corpus.length.max", c.length.max);
  r.get("corpus.marker_rate", c.marker_rate);
  c.rng_seed = derive_seed(plan.seed, "corpus");
  r.get("corpus.rng_seed", c.rng_seed);
  std::uint64_t n_val = plan.n_validation, n_test = plan.n_test;
  r.get("split.validation", n_val);
  r.get("split.test", n_test);
  plan.n_validation = static_cast<std::size_t>(n_val);
  plan.n_test = static_cast<std::size_t>(n_test);

  const KeyValues base_model = with_prefix(kv, "model.");
  const KeyValues base_train = with_prefix(kv, "train.");
  const std::string run_list = r.has("runs") ? r.str("runs") : "pre,none,rpe";
  for (const auto& name : split_list(run_list)) {
    KeyValues model_kv = base_model;
    if (!model_kv.contains("vocab_size")) {
      model_kv.set("vocab_size", std::int64_t{c.vocab_size});
    }
    if (!model_kv.contains("mode")) model_kv.set("mode", name);
    overlay(model_kv, with_prefix(kv, "run." + name + ".model."));
    KeyValues train_kv = base_train;
    overlay(train_kv, with_prefix(kv, "run." + name + ".train."));
    plan.runs.push_back({name, parse_model(model_kv),
                         parse_train(train_kv, derive_seed(plan.seed, "train"))});
  }

  if (r.has("policies")) {
    plan.policies.clear();
    for (const auto& p : split_list(r.str("policies"))) {
      plan.policies.push_back(parse_policy(p));
    }
  }
  EvalOptions& e = plan.eval;
  e.task = c.task;
  r.get("eval.ood_min", e.ood_min);
  r.get("eval.ood_max", e.ood_max);
  e.seed = derive_seed(plan.seed, "eval");
  r.get("eval.seed", e.seed);
  r.get("eval.bucket_width", e.bucket_width);
  r.get("eval.outlier_threshold", e.outlier_threshold);
  r.get("eval.histogram_width", e.histogram_width);
  r.get("ood.examples", plan.ood_examples);
  r.get("ood.source_min", plan.ood_source_min);
  r.get("ood.source_max", plan.ood_source_max);
  plan.validate();
  return plan;
}

ExperimentPlan ExperimentPlan::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open plan " + path.string());
  return from_kv(KeyValues::read(is, false));
}

void ExperimentPlan::save(const std::filesystem::path& path) const {
  std::ostringstream os;
  os << "# lenctl experiment plan\n";
  to_kv().write(os);
  write_text(path, os.str());
}

std::filesystem::path resolve_output_dir(const std::filesystem::path& requested) {
  if (const char* env = std::getenv("LENCTL_OUT"); env && *env) return env;
  return requested;
}

void write_comparison(const std::filesystem::path& path,
                      std::span<const ComparisonRow> rows) {
  std::ostringstream os;
  os << "mode,policy,mae,sd,outlier_rate,r1,r2,rL\n";
  for (const auto& row : rows) {
    os << row.mode << ',' << row.policy << ',' << fmt6(row.mae.mae) << ','
       << fmt6(row.mae.sd) << ',' << fmt6(row.outlier_rate) << ','
       << fmt6(row.rouge.r1) << ',' << fmt6(row.rouge.r2) << ','
       << fmt6(row.rouge.rl) << '\n';
  }
  write_text(path, os.str());
}

ExperimentResult run_experiment(const ExperimentPlan& plan,
                                const ExperimentLog& log) {
  plan.validate();
  ExperimentResult result;
  result.output_dir = resolve_output_dir(plan.output_dir);
  const std::filesystem::path out = result.output_dir;
  const std::filesystem::path tmp = out / "tmp";
  std::filesystem::remove_all(tmp);
  std::filesystem::create_directories(tmp);
  plan.save(tmp / "plan.txt");

  const bool want_ood =
      std::find(plan.policies.begin(), plan.policies.end(),
                LengthPolicy::kRandomOod) != plan.policies.end();

  CorpusSplit split;
  std::vector<TrainingExample> ood;
  stage("gen", log, [&] {
    std::vector<TrainingExample> corpus =
        plan.corpus_path.empty() ? generate_corpus(plan.corpus)
                                 : read_corpus(plan.corpus_path);
    write_corpus(tmp / "corpus.jsonl", corpus);
    split = split_corpus(std::move(corpus), plan.n_validation, plan.n_test);
    if (split.test.empty()) throw ConfigError("test split is empty");
    if (want_ood) {
      CorpusSpec spec = plan.corpus;
      spec.n_examples = plan.ood_examples;
      spec.source_min = plan.ood_source_min;
      spec.source_max = plan.ood_source_max;
      spec.rng_seed = derive_seed(plan.seed, "ood_corpus");
      ood = generate_corpus(spec);
      write_corpus(tmp / "ood_corpus.jsonl", ood);
    }
    return 0;
  });

  std::vector<Transformer> models;
  for (const auto& run : plan.runs) {
    stage("train:" + run.name, log, [&] {
      TrainOutputs outputs;
      outputs.checkpoint_dir = tmp / "runs" / run.name;
      outputs.loss_log = tmp / "runs" / run.name / "loss.csv";
      if (log) {
        const std::int64_t every = std::max<std::int64_t>(1, run.train.steps / 10);
        outputs.on_step = [&, every](const LossRecord& rec) {
          if (rec.step % every == 0 || rec.step == run.train.steps) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "[train:%s] step %lld loss %.4f %.1fs",
                          run.name.c_str(), static_cast<long long>(rec.step),
                          rec.loss, rec.seconds);
            log(buf);
          }
        };
      }
      models.push_back(train(split.train, run.model, run.train, outputs).model);
      return 0;
    });
  }

  for (auto policy : plan.policies) {
    const std::string pname(to_string(policy));
    EvalOptions opts = plan.eval;
    opts.policy = policy;
    opts.task = plan.corpus.task;
    opts.workers = plan.workers;
    const std::vector<TrainingExample>& examples =
        policy == LengthPolicy::kRandomOod ? ood : split.test;
    std::vector<std::vector<double>> errors;
    std::vector<std::pair<std::string, std::vector<BucketReport>>> buckets;
    for (std::size_t i = 0; i < plan.runs.size(); ++i) {
      const auto& run = plan.runs[i];
      stage("eval:" + run.name + ":" + pname, log, [&] {
        const auto records = run_generation(models[i], examples, opts);
        const auto report = summarize(records, opts);
        write_reports(tmp / "eval" / pname / run.name, records, report);
        errors.push_back(abs_errors(records));
        buckets.emplace_back(run.name, report.buckets);
        result.rows.push_back(
            {run.name, pname, report.mae, report.outlier_rate, report.rouge});
        if (log) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "[eval:%s:%s] mae %.3f sd %.3f outliers %.3f r1 %.4f",
                        run.name.c_str(), pname.c_str(), report.mae.mae,
                        report.mae.sd, report.outlier_rate, report.rouge.r1);
          log(buf);
        }
        return 0;
      });
    }
    stage("compare:" + pname, log, [&] {
      std::vector<TTestRow> rows;
      for (std::size_t a = 0; a < plan.runs.size(); ++a) {
        for (std::size_t b = a + 1; b < plan.runs.size(); ++b) {
          rows.push_back({plan.runs[a].name, plan.runs[b].name,
                          paired_t_test(errors[a], errors[b])});
        }
      }
      if (!rows.empty()) write_ttest(tmp / "eval" / pname / "ttest.csv", rows);
      write_bucket_comparison(tmp / "eval" / pname / "buckets_by_mode.csv", buckets);
      return 0;
    });
  }

  stage("finalize", log, [&] {
    write_comparison(tmp / "comparison.csv", result.rows);
    for (const auto& entry : std::filesystem::directory_iterator(tmp)) {
      const auto target = out / entry.path().filename();
      std::filesystem::remove_all(target);
      std::filesystem::rename(entry.path(), target);
    }
    std::filesystem::remove_all(tmp);
    return 0;
  });
  return result;
}

}  // namespace lenctl
