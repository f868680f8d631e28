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

#include "lenctl/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <random>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "lenctl/errors.hpp"
#include "lenctl/rng.hpp"

namespace lenctl {

namespace {

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments population_moments(std::span<const double> xs) {
  Moments m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - m.mean) * (x - m.mean);
  m.sd = std::sqrt(var / static_cast<double>(xs.size()));
  return m;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

double f1(double overlap, double n_cand, double n_ref) {
  if (n_cand == 0.0 && n_ref == 0.0) return 1.0;
  if (overlap == 0.0 || n_cand == 0.0 || n_ref == 0.0) return 0.0;
  const double p = overlap / n_cand;
  const double r = overlap / n_ref;
  return 2.0 * p * r / (p + r);
}

double rouge_n(std::span<const std::int32_t> cand,
               std::span<const std::int32_t> ref, std::size_t n) {
  auto count = [n](std::span<const std::int32_t> s) {
    std::map<std::vector<std::int32_t>, std::size_t> c;
    for (std::size_t i = 0; i + n <= s.size(); ++i) {
      ++c[std::vector<std::int32_t>(s.begin() + static_cast<std::ptrdiff_t>(i),
                                    s.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return c;
  };
  const auto cc = count(cand);
  const auto rc = count(ref);
  std::size_t overlap = 0;
  for (const auto& [gram, k] : cc) {
    auto it = rc.find(gram);
    if (it != rc.end()) overlap += std::min(k, it->second);
  }
  const double nc = cand.size() >= n ? static_cast<double>(cand.size() - n + 1) : 0.0;
  const double nr = ref.size() >= n ? static_cast<double>(ref.size() - n + 1) : 0.0;
  return f1(static_cast<double>(overlap), nc, nr);
}

std::size_t lcs_length(std::span<const std::int32_t> a,
                       std::span<const std::int32_t> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + p.string());
  return os;
}

}  // namespace

std::vector<double> abs_errors(std::span<const GenerationRecord> records) {
  std::vector<double> e;
  e.reserve(records.size());
  for (const auto& r : records) e.push_back(static_cast<double>(r.abs_error()));
  return e;
}

MaeSummary length_mae(std::span<const GenerationRecord> records) {
  if (records.empty()) throw std::invalid_argument("length_mae: no records");
  const auto m = population_moments(abs_errors(records));
  return {m.mean, m.sd, records.size()};
}

double outlier_rate(std::span<const GenerationRecord> records, double threshold) {
  if (records.empty()) return 0.0;
  std::size_t out = 0;
  for (const auto& r : records) {
    if (static_cast<double>(r.abs_error()) > threshold) ++out;
  }
  return static_cast<double>(out) / static_cast<double>(records.size());
}

std::vector<BucketReport> bucket_report(std::span<const GenerationRecord> records,
                                        std::int64_t bucket_width,
                                        double outlier_threshold) {
  if (bucket_width < 1) throw std::invalid_argument("bucket_width must be >= 1");
  std::map<std::int64_t, std::vector<GenerationRecord>> groups;
  for (const auto& r : records) {
    groups[floor_div(r.target_length, bucket_width)].push_back(r);
  }
  std::vector<BucketReport> out;
  for (const auto& [k, recs] : groups) {
    BucketReport b;
    b.lo = k * bucket_width;
    b.hi = (k + 1) * bucket_width;
    const auto m = population_moments(abs_errors(recs));
    b.mae = m.mean;
    b.sd = m.sd;
    b.count = recs.size();
    b.outlier_rate = outlier_rate(recs, outlier_threshold);
    out.push_back(b);
  }
  return out;
}

RougeScores rouge(std::span<const std::int32_t> candidate,
                  std::span<const std::int32_t> reference) {
  RougeScores s;
  s.r1 = rouge_n(candidate, reference, 1);
  s.r2 = rouge_n(candidate, reference, 2);
  s.rl = f1(static_cast<double>(lcs_length(candidate, reference)),
            static_cast<double>(candidate.size()),
            static_cast<double>(reference.size()));
  return s;
}

RougeScores mean_rouge(std::span<const GenerationRecord> records) {
  RougeScores m;
  if (records.empty()) return m;
  for (const auto& r : records) {
    const auto s = rouge(r.generated, r.reference);
    m.r1 += s.r1;
    m.r2 += s.r2;
    m.rl += s.rl;
  }
  const double n = static_cast<double>(records.size());
  m.r1 /= n;
  m.r2 /= n;
  m.rl /= n;
  return m;
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("incomplete_beta: a, b > 0");
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete_beta: x in [0,1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("student_t_two_sided: df > 0");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("paired_t_test: lists differ in length");
  }
  if (a.size() < 2) throw std::invalid_argument("paired_t_test: need n >= 2");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  double mean = 0.0;
  for (double x : d) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  TTestResult r;
  r.n = n;
  r.mean_diff = mean;
  if (ss == 0.0) {
    r.zero_variance = true;
    if (mean == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p = student_t_two_sided(r.t, static_cast<double>(n - 1));
  return r;
}

std::vector<HistogramRow> length_histogram(
    std::span<const GenerationRecord> records, std::int64_t bin_width) {
  if (bin_width < 1) throw std::invalid_argument("bin_width must be >= 1");
  if (records.empty()) return {};
  std::map<std::int64_t, std::pair<std::size_t, std::size_t>> bins;
  for (const auto& r : records) {
    ++bins[floor_div(r.target_length, bin_width)].first;
    ++bins[floor_div(r.generated_length, bin_width)].second;
  }
  const std::int64_t first = bins.begin()->first;
  const std::int64_t last = bins.rbegin()->first;
  const double norm = static_cast<double>(records.size()) *
                      static_cast<double>(bin_width);
  std::vector<HistogramRow> out;
  for (std::int64_t k = first; k <= last; ++k) {
    HistogramRow row;
    row.lo = k * bin_width;
    row.hi = (k + 1) * bin_width;
    auto it = bins.find(k);
    if (it != bins.end()) {
      row.reference_count = it->second.first;
      row.generated_count = it->second.second;
    }
    row.reference_density = static_cast<double>(row.reference_count) / norm;
    row.generated_density = static_cast<double>(row.generated_count) / norm;
    out.push_back(row);
  }
  return out;
}

std::string_view to_string(LengthPolicy policy) {
  return policy == LengthPolicy::kReference ? "reference" : "random_ood";
}

LengthPolicy parse_policy(std::string_view text) {
  if (text == "reference" || text == "REFERENCE") return LengthPolicy::kReference;
  if (text == "random_ood" || text == "RANDOM_OOD") return LengthPolicy::kRandomOod;
  throw ConfigError("unknown length policy '" + std::string(text) + "'");
}

std::int64_t max_supported_length(const TrainingExample& ex, CorpusTask task) {
  if (task == CorpusTask::kPrefixCopy) {
    return static_cast<std::int64_t>(ex.source.size());
  }
  std::int64_t marked = 0;
  for (std::size_t i = 0; i + 1 < ex.source.size(); ++i) {
    if (ex.source[i] == kMarkerId) ++marked;
  }
  return marked;
}

std::vector<std::int32_t> reference_for_length(const TrainingExample& ex,
                                               CorpusTask task,
                                               std::int64_t l) {
  if (l > max_supported_length(ex, task)) {
    throw std::invalid_argument("source supports at most " +
                                std::to_string(max_supported_length(ex, task)) +
                                " tokens, requested " + std::to_string(l));
  }
  std::vector<std::int32_t> ref;
  if (task == CorpusTask::kPrefixCopy) {
    ref.assign(ex.source.begin(), ex.source.begin() + l);
    return ref;
  }
  for (std::size_t i = 0; i + 1 < ex.source.size() &&
                          static_cast<std::int64_t>(ref.size()) < l;
       ++i) {
    if (ex.source[i] == kMarkerId) ref.push_back(ex.source[i + 1]);
  }
  return ref;
}

std::vector<GenerationRecord> run_generation(
    const Transformer& model, std::span<const TrainingExample> examples,
    const EvalOptions& opts) {
  const int V = model.config().vocab_size;
  std::vector<GenerationRecord> records(examples.size());
  // Targets and references are assigned up front so that failures surface
  // before any decoding work.
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const TrainingExample& ex = examples[i];
    for (std::int32_t id : ex.source) {
      if (id < 0 || id >= V) {
        throw std::invalid_argument(
            "corpus token id " + std::to_string(id) +
            " outside checkpoint vocabulary of " + std::to_string(V));
      }
    }
    GenerationRecord& rec = records[i];
    rec.id = static_cast<std::int64_t>(i);
    if (opts.policy == LengthPolicy::kReference) {
      rec.target_length = ex.l;
      rec.reference.assign(ex.target.begin(), ex.target.end() - 1);
    } else {
      const std::int64_t hi =
          std::min(opts.ood_max, max_supported_length(ex, opts.task));
      if (hi < opts.ood_min) {
        throw std::invalid_argument(
            "example " + std::to_string(i) + " supports at most " +
            std::to_string(hi) + " tokens, below the OOD minimum " +
            std::to_string(opts.ood_min));
      }
      std::mt19937_64 rng(derive_seed(opts.seed, static_cast<std::uint64_t>(i)));
      std::uniform_int_distribution<std::int64_t> pick(opts.ood_min, hi);
      rec.target_length = pick(rng);
      rec.reference = reference_for_length(ex, opts.task, rec.target_length);
    }
  }

  auto decode_one = [&](std::size_t i) {
    GenerationRecord& rec = records[i];
    DecodeOptions dec = opts.decode;
    dec.seed = derive_seed(opts.decode.seed, static_cast<std::uint64_t>(i));
    GenerationResult gen = model.generate(examples[i].source, rec.target_length, dec);
    rec.generated = std::move(gen.tokens);
    rec.generated_length = static_cast<std::int64_t>(rec.generated.size());
    rec.cap_hit = gen.cap_hit;
  };
  const std::size_t workers = static_cast<std::size_t>(std::max(1, opts.workers));
  if (workers == 1 || examples.size() < 2) {
    for (std::size_t i = 0; i < examples.size(); ++i) decode_one(i);
    return records;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, examples.size()); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < examples.size(); i = next++) {
        try {
          decode_one(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return records;
}

EvaluationReport summarize(std::span<const GenerationRecord> records,
                           const EvalOptions& opts) {
  EvaluationReport rep;
  rep.mae = length_mae(records);
  rep.buckets = bucket_report(records, opts.bucket_width, opts.outlier_threshold);
  rep.rouge = mean_rouge(records);
  rep.outlier_rate = outlier_rate(records, opts.outlier_threshold);
  for (const auto& r : records) rep.cap_hits += r.cap_hit ? 1 : 0;
  rep.histogram = length_histogram(records, opts.histogram_width);
  return rep;
}

void write_reports(const std::filesystem::path& dir,
                   std::span<const GenerationRecord> records,
                   const EvaluationReport& report) {
  std::filesystem::create_directories(dir);
  {
    auto os = open_out(dir / "mae_summary.csv");
    os << "mae,sd,count,outlier_rate,cap_hits\n"
       << fmt(report.mae.mae) << ',' << fmt(report.mae.sd) << ','
       << report.mae.count << ',' << fmt(report.outlier_rate) << ','
       << report.cap_hits << '\n';
  }
  {
    auto os = open_out(dir / "buckets.csv");
    os << "bucket_lo,bucket_hi,mae,sd,count,outlier_rate\n";
    for (const auto& b : report.buckets) {
      os << b.lo << ',' << b.hi << ',' << fmt(b.mae) << ',' << fmt(b.sd) << ','
         << b.count << ',' << fmt(b.outlier_rate) << '\n';
    }
  }
  {
    auto os = open_out(dir / "rouge.csv");
    os << "r1,r2,rL\n"
       << fmt(report.rouge.r1) << ',' << fmt(report.rouge.r2) << ','
       << fmt(report.rouge.rl) << '\n';
  }
  {
    auto os = open_out(dir / "length_density.csv");
    os << "bin_lo,bin_hi,reference_count,reference_density,generated_count,"
          "generated_density\n";
    for (const auto& h : report.histogram) {
      os << h.lo << ',' << h.hi << ',' << h.reference_count << ','
         << fmt(h.reference_density) << ',' << h.generated_count << ','
         << fmt(h.generated_density) << '\n';
    }
  }
  {
    auto os = open_out(dir / "records.jsonl");
    for (const auto& r : records) {
      nlohmann::ordered_json j;
      j["id"] = r.id;
      j["l"] = r.target_length;
      j["generated_length"] = r.generated_length;
      j["cap_hit"] = r.cap_hit;
      j["generated"] = r.generated;
      j["reference"] = r.reference;
      os << j.dump() << '\n';
    }
  }
}

void write_ttest(const std::filesystem::path& path,
                 std::span<const TTestRow> rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto os = open_out(path);
  os << "a,b,n,mean_diff,t,p,zero_variance\n";
  for (const auto& row : rows) {
    char t[64];
    char p[64];
    std::snprintf(t, sizeof t, "%.6g", row.result.t);
    std::snprintf(p, sizeof p, "%.6g", row.result.p);
    os << row.name_a << ',' << row.name_b << ',' << row.result.n << ','
       << fmt(row.result.mean_diff) << ',' << t << ',' << p << ','
       << (row.result.zero_variance ? "true" : "false") << '\n';
  }
}

}  // namespace lenctl
