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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lenctl/corpus.hpp"
#include "lenctl/model.hpp"

namespace lenctl {

struct GenerationRecord {
  std::int64_t id = 0;
  std::int64_t target_length = 0;
  std::int64_t generated_length = 0;
  bool cap_hit = false;
  std::vector<std::int32_t> generated;
  std::vector<std::int32_t> reference;

  std::int64_t abs_error() const {
    const std::int64_t d = generated_length - target_length;
    return d < 0 ? -d : d;
  }
};

struct MaeSummary {
  double mae = 0.0;
  double sd = 0.0;  // population SD of |generated - target|
  std::size_t count = 0;
};

/// Throws std::invalid_argument on empty input.
MaeSummary length_mae(std::span<const GenerationRecord> records);

struct BucketReport {
  std::int64_t lo = 0;  // inclusive
  std::int64_t hi = 0;  // exclusive
  double mae = 0.0;
  double sd = 0.0;
  std::size_t count = 0;
  double outlier_rate = 0.0;  // fraction with |error| > threshold
};

/// Groups by target length into [k*w, (k+1)*w); only populated buckets are
/// returned, in increasing order.
std::vector<BucketReport> bucket_report(std::span<const GenerationRecord> records,
                                        std::int64_t bucket_width,
                                        double outlier_threshold = 20.0);

/// Fraction of records with |error| > threshold.
double outlier_rate(std::span<const GenerationRecord> records, double threshold);

struct RougeScores {
  double r1 = 0.0;
  double r2 = 0.0;
  double rl = 0.0;
};

/// ROUGE-1/2 F1 from clipped n-gram overlap and ROUGE-L F1 from the longest
/// common subsequence, on token ids. When both sides have no n-grams of an
/// order the score for that order is 1; when only one side is empty it is 0.
RougeScores rouge(std::span<const std::int32_t> candidate,
                  std::span<const std::int32_t> reference);

/// Mean of per-record ROUGE scores.
RougeScores mean_rouge(std::span<const GenerationRecord> records);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t n = 0;
  double mean_diff = 0.0;
  /// Differences have zero variance: t is 0 (all equal to zero) or +/-inf.
  bool zero_variance = false;
};

/// Paired Student t-test on d_i = a_i - b_i, two-sided p with n - 1 degrees
/// of freedom.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta I_x(a, b) via continued fraction.
double incomplete_beta(double a, double b, double x);
/// Two-sided tail probability P(|T| >= |t|) for Student t with `df` dof.
double student_t_two_sided(double t, double df);

struct HistogramRow {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::size_t reference_count = 0;
  double reference_density = 0.0;
  std::size_t generated_count = 0;
  double generated_density = 0.0;
};

/// Side-by-side densities of target and generated lengths over bins
/// [k*w, (k+1)*w) spanning every populated bin. Densities integrate to 1.
std::vector<HistogramRow> length_histogram(
    std::span<const GenerationRecord> records, std::int64_t bin_width);

enum class LengthPolicy { kReference, kRandomOod };

std::string_view to_string(LengthPolicy policy);
LengthPolicy parse_policy(std::string_view text);

struct EvalOptions {
  LengthPolicy policy = LengthPolicy::kReference;
  /// RANDOM_OOD range; the upper end is capped by what the source supports.
  std::int64_t ood_min = 100;
  std::int64_t ood_max = 320;
  std::uint64_t seed = 1;
  /// Task used to derive references for lengths other than the example's.
  CorpusTask task = CorpusTask::kPrefixCopy;
  std::int64_t bucket_width = 25;
  double outlier_threshold = 20.0;
  std::int64_t histogram_width = 10;
  DecodeOptions decode;
  /// Generation threads; records are identical for any worker count.
  int workers = 1;
};

/// Longest output the example's source supports for `task`.
std::int64_t max_supported_length(const TrainingExample& ex, CorpusTask task);
/// The ideal output of length l for the example's source.
std::vector<std::int32_t> reference_for_length(const TrainingExample& ex,
                                               CorpusTask task,
                                               std::int64_t l);

/// Runs generation for every example; records sorted by id. Throws when the
/// model vocabulary cannot represent the corpus.
std::vector<GenerationRecord> run_generation(
    const Transformer& model, std::span<const TrainingExample> examples,
    const EvalOptions& opts);

struct EvaluationReport {
  MaeSummary mae;
  std::vector<BucketReport> buckets;
  RougeScores rouge;
  double outlier_rate = 0.0;
  std::size_t cap_hits = 0;
  std::vector<HistogramRow> histogram;
};

EvaluationReport summarize(std::span<const GenerationRecord> records,
                           const EvalOptions& opts);

/// Writes mae_summary.csv, buckets.csv, rouge.csv, length_density.csv and
/// records.jsonl into `dir`.
void write_reports(const std::filesystem::path& dir,
                   std::span<const GenerationRecord> records,
                   const EvaluationReport& report);

struct TTestRow {
  std::string name_a;
  std::string name_b;
  TTestResult result;  // on errors of a minus errors of b
};

/// ttest.csv with one row per compared pair of runs.
void write_ttest(const std::filesystem::path& path,
                 std::span<const TTestRow> rows);

std::vector<double> abs_errors(std::span<const GenerationRecord> records);

}  // namespace lenctl
