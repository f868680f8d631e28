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
#include <random>
#include <sstream>

#include "lenctl/evaluation.hpp"
#include "support/gradcheck.hpp"

using namespace lenctl;

namespace {

GenerationRecord rec(std::int64_t id, std::int64_t l, std::int64_t gen) {
  GenerationRecord r;
  r.id = id;
  r.target_length = l;
  r.generated_length = gen;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("length mae") {
  const std::vector<GenerationRecord> exact{rec(0, 5, 5), rec(1, 9, 9)};
  const auto z = length_mae(exact);
  CHECK(z.mae == 0.0);
  CHECK(z.sd == 0.0);
  const std::vector<GenerationRecord> two{rec(0, 10, 11), rec(1, 10, 7)};
  const auto m = length_mae(two);
  CHECK(m.mae == 2.0);
  CHECK(m.sd == 1.0);
  CHECK(m.count == 2);
  CHECK_THROWS(length_mae(std::vector<GenerationRecord>{}));
}

TEST_CASE("bucket report") {
  const std::vector<GenerationRecord> one{rec(0, 305, 300)};
  const auto b = bucket_report(one, 25);
  REQUIRE(b.size() == 1);
  CHECK(b[0].lo == 300);
  CHECK(b[0].hi == 325);

  const std::vector<GenerationRecord> outliers{rec(0, 100, 140), rec(1, 110, 60)};
  CHECK(bucket_report(outliers, 25, 20)[0].outlier_rate == 1.0);

  const std::vector<GenerationRecord> mixed{rec(0, 50, 50), rec(1, 52, 77),
                                            rec(2, 60, 55)};
  const auto mb = bucket_report(mixed, 25, 20);
  REQUIRE(mb.size() == 1);
  CHECK(mb[0].outlier_rate == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(mb[0].mae == 10.0);
  CHECK(mb[0].count == 3);

  // The threshold itself is not an outlier.
  const std::vector<GenerationRecord> edge{rec(0, 40, 60)};
  CHECK(bucket_report(edge, 10, 20)[0].outlier_rate == 0.0);
  CHECK_THROWS(bucket_report(edge, 0, 20));
}

TEST_CASE("bucket partition property") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> l(1, 400), e(-30, 30);
  std::vector<GenerationRecord> recs;
  for (int i = 0; i < 500; ++i) {
    const int t = l(rng);
    recs.push_back(rec(i, t, std::max(0, t + e(rng))));
  }
  for (std::int64_t w : {1, 7, 25, 1000}) {
    std::size_t total = 0;
    std::int64_t prev_hi = -1;
    for (const auto& b : bucket_report(recs, w)) {
      total += b.count;
      CHECK(b.hi - b.lo == w);
      CHECK(b.lo % w == 0);
      CHECK(b.lo >= prev_hi);
      prev_hi = b.hi;
    }
    CHECK(total == recs.size());
  }
}

TEST_CASE("rouge") {
  const std::vector<std::int32_t> x{4, 5, 6, 7};
  const auto same = rouge(x, x);
  CHECK(same.r1 == 1.0);
  CHECK(same.r2 == 1.0);
  CHECK(same.rl == 1.0);
  const std::vector<std::int32_t> y{8, 9, 10};
  const auto disjoint = rouge(x, y);
  CHECK(disjoint.r1 == 0.0);
  CHECK(disjoint.r2 == 0.0);
  CHECK(disjoint.rl == 0.0);

  const std::vector<std::int32_t> cand{1, 2, 3, 5}, ref{1, 2, 4, 5};
  const auto s = rouge(cand, ref);
  CHECK(s.r1 == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(s.r2 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(s.rl == doctest::Approx(0.75).epsilon(1e-15));

  const auto empty = rouge(std::vector<std::int32_t>{}, ref);
  CHECK(empty.r1 == 0.0);
  CHECK(empty.r2 == 0.0);
  CHECK(empty.rl == 0.0);

  // Clipped counts: repeated candidate tokens only match as often as the
  // reference holds them.
  const std::vector<std::int32_t> rep{7, 7, 7, 7}, once{7, 8};
  CHECK(rouge(rep, once).r1 == doctest::Approx(2.0 * 0.25 * 0.5 / 0.75).epsilon(1e-15));

  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> tok(4, 9), len(1, 12);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::int32_t> a(len(rng)), b(len(rng));
    for (auto& v : a) v = tok(rng);
    for (auto& v : b) v = tok(rng);
    const auto r = rouge(a, b);
    for (double v : {r.r1, r.r2, r.rl}) CHECK((v >= 0.0 && v <= 1.0));
    CHECK(rouge(a, a).r1 == 1.0);
  }
}

TEST_CASE("paired t-test") {
  const std::vector<double> a{2, 4, 6, 8}, b{1, 2, 3, 4};
  const auto r = paired_t_test(a, b);
  CHECK(r.t == doctest::Approx(3.872983346207417).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.030466291662170977).epsilon(1e-10));
  CHECK(std::fabs(r.t - 3.873) < 1e-3);
  CHECK(std::fabs(r.p - 0.0305) < 1e-3);
  CHECK(r.n == 4);
  CHECK(r.mean_diff == 2.5);
  CHECK_FALSE(r.zero_variance);

  const auto swapped = paired_t_test(b, a);
  CHECK(swapped.t == -r.t);
  CHECK(swapped.p == r.p);

  const std::vector<double> c{3.1, 2.0, 5.5, 4.2, 1.0, 0.0, 2.2, 6.1};
  const std::vector<double> d{1.0, 2.5, 3.0, 3.9, 1.5, 0.2, 0.1, 4.0};
  const auto r2 = paired_t_test(c, d);
  CHECK(r2.t == doctest::Approx(2.1063189855609954).epsilon(1e-12));
  CHECK(r2.p == doctest::Approx(0.07318514143710943).epsilon(1e-10));

  const auto same = paired_t_test(a, a);
  CHECK(same.zero_variance);
  CHECK(same.t == 0.0);
  CHECK(same.p == 1.0);

  const std::vector<double> e{3, 4, 5}, f{1, 2, 3};
  const auto constant = paired_t_test(e, f);
  CHECK(constant.zero_variance);
  CHECK(std::isinf(constant.t));
  CHECK(constant.t > 0);
  CHECK(constant.p == 0.0);

  CHECK_THROWS(paired_t_test(std::vector<double>{1.0}, std::vector<double>{2.0}));
  CHECK_THROWS(paired_t_test(a, e));
}

TEST_CASE("incomplete beta and student t") {
  CHECK(incomplete_beta(2.5, 0.5, 0.3) ==
        doctest::Approx(0.0189271240719456517).epsilon(1e-12));
  CHECK(incomplete_beta(10, 3, 0.9) ==
        doctest::Approx(0.889130022255000057).epsilon(1e-12));
  CHECK(incomplete_beta(2, 3, 0.0) == 0.0);
  CHECK(incomplete_beta(2, 3, 1.0) == 1.0);
  CHECK(student_t_two_sided(0.0, 5) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("length histogram") {
  const std::vector<GenerationRecord> one{rec(0, 37, 37)};
  const auto h1 = length_histogram(one, 10);
  REQUIRE(h1.size() == 1);
  CHECK(h1[0].lo == 30);
  CHECK(h1[0].reference_count == 1);
  CHECK(h1[0].reference_density == doctest::Approx(0.1));

  std::vector<GenerationRecord> recs;
  for (int l = 1; l <= 100; ++l) recs.push_back(rec(l, l, l + (l % 3)));
  const auto h = length_histogram(recs, 10);
  double ref_mass = 0.0, gen_mass = 0.0;
  std::size_t ref_total = 0;
  for (const auto& row : h) {
    ref_mass += row.reference_density * 10;
    gen_mass += row.generated_density * 10;
    ref_total += row.reference_count;
  }
  CHECK(std::fabs(ref_mass - 1.0) < 1e-9);
  CHECK(std::fabs(gen_mass - 1.0) < 1e-9);
  CHECK(ref_total == 100);
  // Lengths 1..100 in width-10 bins: [0,10) holds 9, [100,110) holds 1, the
  // rest hold 10 each.
  for (const auto& row : h) {
    if (row.lo >= 10 && row.lo < 100) CHECK(row.reference_count == 10);
  }
}

TEST_CASE("policy names and references") {
  CHECK(parse_policy("reference") == LengthPolicy::kReference);
  CHECK(parse_policy("random_ood") == LengthPolicy::kRandomOod);
  CHECK(to_string(LengthPolicy::kRandomOod) == "random_ood");

  const auto ex = prefix_copy_example({5, 6, 7, 8, 9}, 2);
  CHECK(max_supported_length(ex, CorpusTask::kPrefixCopy) == 5);
  CHECK(reference_for_length(ex, CorpusTask::kPrefixCopy, 4) ==
        std::vector<std::int32_t>{5, 6, 7, 8});
  const auto mx = marked_extract_example({kMarkerId, 5, 6, kMarkerId, 7, 8}, 1);
  CHECK(max_supported_length(mx, CorpusTask::kMarkedExtract) == 2);
  CHECK(reference_for_length(mx, CorpusTask::kMarkedExtract, 2) ==
        std::vector<std::int32_t>{5, 7});
}

TEST_CASE("evaluation runs are deterministic and write every report") {
  Transformer model(lenctl::testing::tiny_config(LengthControlMode::kPre), 3);
  CorpusSpec spec;
  spec.vocab_size = 11;
  spec.n_examples = 6;
  spec.source_min = 10;
  spec.source_max = 12;
  spec.length = {4.0, 1.0, 2, 8};
  const auto corpus = generate_corpus(spec);

  EvalOptions opts;
  opts.ood_min = 9;
  opts.ood_max = 11;
  opts.policy = LengthPolicy::kRandomOod;
  const auto a = run_generation(model, corpus, opts);
  const auto b = run_generation(model, corpus, opts);
  REQUIRE(a.size() == corpus.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == static_cast<std::int64_t>(i));
    CHECK(a[i].generated == b[i].generated);
    CHECK(a[i].target_length >= 9);
    CHECK(a[i].target_length <= 11);
    CHECK(a[i].target_length <= static_cast<std::int64_t>(corpus[i].source.size()));
    CHECK(a[i].generated_length == static_cast<std::int64_t>(a[i].generated.size()));
    CHECK(a[i].reference.size() == static_cast<std::size_t>(a[i].target_length));
  }

  const auto dir = std::filesystem::temp_directory_path() / "lenctl_eval_test";
  std::filesystem::remove_all(dir);
  const auto report = summarize(a, opts);
  write_reports(dir / "x", a, report);
  write_reports(dir / "y", b, summarize(b, opts));
  for (const char* f : {"mae_summary.csv", "buckets.csv", "rouge.csv",
                        "length_density.csv", "records.jsonl"}) {
    CHECK(std::filesystem::exists(dir / "x" / f));
    CHECK(slurp(dir / "x" / f) == slurp(dir / "y" / f));
  }
  CHECK(slurp(dir / "x" / "buckets.csv").rfind(
            "bucket_lo,bucket_hi,mae,sd,count,outlier_rate\n", 0) == 0);

  const std::vector<TTestRow> rows{
      {"pre", "rpe",
       paired_t_test(std::vector<double>{2, 4, 6, 8}, std::vector<double>{1, 2, 3, 4})}};
  write_ttest(dir / "ttest.csv", rows);
  const std::string t = slurp(dir / "ttest.csv");
  CHECK(t.rfind("a,b,n,mean_diff,t,p,zero_variance\npre,rpe,4,", 0) == 0);

  ModelConfig small = lenctl::testing::tiny_config(LengthControlMode::kPre);
  small.vocab_size = 8;
  Transformer tiny(small, 1);
  CHECK_THROWS(run_generation(tiny, corpus, EvalOptions{}));

  opts.ood_min = 50;
  opts.ood_max = 60;
  CHECK_THROWS(run_generation(model, corpus, opts));
  std::filesystem::remove_all(dir);
}
