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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lenctl/corpus.hpp"
#include "lenctl/errors.hpp"
#include "lenctl/model.hpp"

using namespace lenctl;

namespace {

std::string to_text(std::span<const TrainingExample> ex) {
  std::ostringstream os;
  write_corpus(os, ex);
  return os.str();
}

}  // namespace

TEST_CASE("task names") {
  CHECK(parse_task("prefix_copy") == CorpusTask::kPrefixCopy);
  CHECK(parse_task("marked_extract") == CorpusTask::kMarkedExtract);
  CHECK(to_string(CorpusTask::kMarkedExtract) == "marked_extract");
  CHECK_THROWS(parse_task("summarize"));
}

TEST_CASE("prefix copy definition") {
  const auto ex = prefix_copy_example({7, 3, 9, 2}, 2);
  CHECK(ex.target == std::vector<std::int32_t>{7, 3, kEndId});
  CHECK(ex.l == 2);
  CHECK(ex.decoder_input() == std::vector<std::int32_t>{kBeginId, 7, 3});
  CHECK_THROWS(prefix_copy_example({7, 3}, 3));
}

TEST_CASE("marked extract definition") {
  const std::vector<std::int32_t> src{5, kMarkerId, 9, 6, kMarkerId, 4, kMarkerId, 8};
  const auto ex = marked_extract_example(src, 2);
  CHECK(ex.target == std::vector<std::int32_t>{9, 4, kEndId});
  CHECK_THROWS(marked_extract_example(src, 4));
  CHECK_THROWS(marked_extract_example({5, 6, 7}, 1));
}

TEST_CASE("example validation") {
  TrainingExample ok{{4, 5}, {4, kEndId}, 1};
  CHECK_NOTHROW(ok.validate());
  TrainingExample wrong_l{{4, 5}, {4, kEndId}, 2};
  CHECK_THROWS_AS(wrong_l.validate(), FormatError);
  TrainingExample no_end{{4, 5}, {4, 5}, 1};
  CHECK_THROWS_AS(no_end.validate(), FormatError);
  TrainingExample empty{{4, 5}, {kEndId}, 0};
  CHECK_THROWS_AS(empty.validate(), FormatError);
}

TEST_CASE("spec validation") {
  CorpusSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.length.max = 100;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  CorpusSpec marked;
  marked.task = CorpusTask::kMarkedExtract;
  marked.marker_rate = 1.5;
  CHECK_THROWS_AS(marked.validate(), ConfigError);
}

TEST_CASE("generated examples satisfy invariants") {
  for (auto task : {CorpusTask::kPrefixCopy, CorpusTask::kMarkedExtract}) {
    CorpusSpec spec;
    spec.task = task;
    spec.n_examples = 300;
    spec.source_min = 80;
    spec.source_max = 96;
    if (task == CorpusTask::kMarkedExtract) {
      spec.source_min = 160;
      spec.source_max = 200;
    }
    const auto corpus = generate_corpus(spec);
    REQUIRE(corpus.size() == 300);
    for (const auto& ex : corpus) {
      CHECK_NOTHROW(ex.validate());
      CHECK(ex.l >= spec.length.min);
      CHECK(ex.l <= spec.length.max);
      CHECK(static_cast<std::int64_t>(ex.source.size()) >= spec.source_min);
      CHECK(static_cast<std::int64_t>(ex.source.size()) <= spec.source_max);
      for (auto id : ex.source) CHECK((id >= kMarkerId && id < spec.vocab_size));
      if (task == CorpusTask::kPrefixCopy) {
        CHECK(ex == prefix_copy_example(ex.source, ex.l));
      } else {
        CHECK(ex == marked_extract_example(ex.source, ex.l));
      }
    }
  }
}

TEST_CASE("length distribution moments") {
  CorpusSpec spec;
  spec.n_examples = 10000;
  spec.rng_seed = 2024;
  const auto corpus = generate_corpus(spec);
  double mean = 0.0;
  for (const auto& ex : corpus) mean += static_cast<double>(ex.l);
  mean /= static_cast<double>(corpus.size());
  CHECK(std::fabs(mean - 40.0) <= 1.0);
}

TEST_CASE("sources without markers exhaust the retries") {
  CorpusSpec spec;
  spec.task = CorpusTask::kMarkedExtract;
  spec.marker_rate = 0.0;
  spec.n_examples = 1;
  CHECK_THROWS_AS(generate_corpus(spec), std::runtime_error);
}

TEST_CASE("generation is a pure function of the seed") {
  CorpusSpec spec;
  spec.n_examples = 50;
  CHECK(to_text(generate_corpus(spec)) == to_text(generate_corpus(spec)));
  CHECK(generate_example(spec, 17) == generate_corpus(spec)[17]);
  CorpusSpec other = spec;
  other.rng_seed = 2;
  CHECK(to_text(generate_corpus(other)) != to_text(generate_corpus(spec)));
}

TEST_CASE("corpus file round trip") {
  CorpusSpec spec;
  spec.n_examples = 100;
  spec.task = CorpusTask::kMarkedExtract;
  spec.source_min = 160;
  spec.source_max = 200;
  const auto corpus = generate_corpus(spec);
  const std::string text = to_text(corpus);
  CHECK(text.rfind("#", 0) == 0);
  CHECK(text.find("\n{\"source\":[") != std::string::npos);
  std::istringstream is(text);
  CHECK(read_corpus(is) == corpus);

  const auto path = std::filesystem::temp_directory_path() / "lenctl_corpus.jsonl";
  write_corpus(path, corpus);
  CHECK(read_corpus(path) == corpus);
  std::filesystem::remove(path);
}

TEST_CASE("corpus reader errors") {
  std::istringstream empty("");
  CHECK(read_corpus(empty).empty());

  std::istringstream inconsistent(
      "# header\n"
      "{\"source\":[4,5],\"target\":[4,2],\"l\":1}\n"
      "{\"source\":[4,5],\"target\":[4,2],\"l\":3}\n");
  try {
    read_corpus(inconsistent);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 3);
  }

  std::istringstream malformed("{\"source\":[4,5],\"target\":[4,2]\n");
  try {
    read_corpus(malformed);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 1);
  }
}

TEST_CASE("splits are disjoint and exact") {
  CorpusSpec spec;
  spec.n_examples = 100;
  const auto corpus = generate_corpus(spec);
  const auto split = split_corpus(corpus, 10, 25);
  CHECK(split.train.size() == 65);
  CHECK(split.validation.size() == 10);
  CHECK(split.test.size() == 25);
  CHECK(split.train.front() == corpus[0]);
  CHECK(split.validation.front() == corpus[65]);
  CHECK(split.test.front() == corpus[75]);
  CHECK(split.test.back() == corpus[99]);
  CHECK_THROWS(split_corpus(corpus, 60, 60));
}
