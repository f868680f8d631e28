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
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lenctl/corpus.hpp"
#include "lenctl/evaluation.hpp"
#include "lenctl/key_value.hpp"
#include "lenctl/model.hpp"
#include "lenctl/training.hpp"

namespace lenctl {

/// One trained model of an experiment.
struct ExperimentRun {
  std::string name;
  ModelConfig model;
  TrainConfig train;
};

/// gen -> train x runs -> eval x policies. Read from and written to
/// line-oriented key=value plan files.
struct ExperimentPlan {
  /// Existing corpus file; when empty the corpus is generated from `corpus`.
  std::filesystem::path corpus_path;
  CorpusSpec corpus;
  std::size_t n_validation = 0;
  std::size_t n_test = 500;
  std::vector<ExperimentRun> runs;
  std::vector<LengthPolicy> policies{LengthPolicy::kReference,
                                     LengthPolicy::kRandomOod};
  EvalOptions eval;
  /// Held-out examples for RANDOM_OOD, with sources long enough for the
  /// requested range.
  std::int64_t ood_examples = 200;
  std::int64_t ood_source_min = 330;
  std::int64_t ood_source_max = 360;
  std::filesystem::path output_dir = "lenctl_out";
  std::uint64_t seed = 1;
  int workers = 1;

  /// Throws ConfigError on duplicate run names or invalid sub-configs.
  void validate() const;

  KeyValues to_kv() const;
  static ExperimentPlan from_kv(const KeyValues& kv);
  static ExperimentPlan load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

/// One comparison.csv row.
struct ComparisonRow {
  std::string mode;
  std::string policy;
  MaeSummary mae;
  double outlier_rate = 0.0;
  RougeScores rouge;
};

struct ExperimentResult {
  std::vector<ComparisonRow> rows;
  std::filesystem::path output_dir;
};

/// Progress messages, one line per stage event.
using ExperimentLog = std::function<void(std::string_view)>;

/// Error raised by a pipeline stage; what() is prefixed with "[stage] ".
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Runs the plan. Everything is written below `<output_dir>/tmp/` first and
/// moved into `output_dir` once every stage has succeeded.
ExperimentResult run_experiment(const ExperimentPlan& plan,
                                const ExperimentLog& log = {});

void write_comparison(const std::filesystem::path& path,
                      std::span<const ComparisonRow> rows);

/// Output directory after applying the LENCTL_OUT override.
std::filesystem::path resolve_output_dir(const std::filesystem::path& requested);

}  // namespace lenctl
