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
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace lenctl {

enum class CorpusTask { kPrefixCopy, kMarkedExtract };

std::string_view to_string(CorpusTask task);
/// Accepts prefix_copy|marked_extract.
CorpusTask parse_task(std::string_view text);

/// Truncated normal over integer target lengths.
struct LengthDistribution {
  double mean = 40.0;
  double sd = 10.0;
  std::int64_t min = 8;
  std::int64_t max = 80;
};

struct CorpusSpec {
  CorpusTask task = CorpusTask::kPrefixCopy;
  int vocab_size = 64;
  std::int64_t n_examples = 1000;
  std::int64_t source_min = 80;
  std::int64_t source_max = 96;
  LengthDistribution length;
  /// MARKED_EXTRACT: probability that a content token is preceded by a marker.
  double marker_rate = 0.5;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

struct TrainingExample {
  std::vector<std::int32_t> source;
  /// Ends with the end token.
  std::vector<std::int32_t> target;
  std::int64_t l = 0;

  /// Throws FormatError when l != len(target) - 1, the end token is missing,
  /// or l < 1.
  void validate() const;
  /// begin + target[0 .. l-1], the teacher-forced decoder input.
  std::vector<std::int32_t> decoder_input() const;
  bool operator==(const TrainingExample&) const = default;
};

/// Target = first l source tokens + end token. Throws if l > len(source).
TrainingExample prefix_copy_example(std::vector<std::int32_t> source,
                                    std::int64_t l);
/// Target = the first l tokens that follow a marker + end token. Throws if
/// the source holds fewer than l marked tokens.
TrainingExample marked_extract_example(std::vector<std::int32_t> source,
                                       std::int64_t l);

/// Example `index` of the corpus; a pure function of (spec, index).
TrainingExample generate_example(const CorpusSpec& spec, std::uint64_t index);
std::vector<TrainingExample> generate_corpus(const CorpusSpec& spec);

/// One JSON record per line after a '#' header comment.
void write_corpus(std::ostream& os, std::span<const TrainingExample> examples);
std::vector<TrainingExample> read_corpus(std::istream& is);
void write_corpus(const std::filesystem::path& path,
                  std::span<const TrainingExample> examples);
std::vector<TrainingExample> read_corpus(const std::filesystem::path& path);

struct CorpusSplit {
  std::vector<TrainingExample> train;
  std::vector<TrainingExample> validation;
  std::vector<TrainingExample> test;
};

/// Contiguous split by index: [0, n-v-t) train, then validation, then test.
CorpusSplit split_corpus(std::vector<TrainingExample> examples,
                         std::size_t n_validation, std::size_t n_test);

}  // namespace lenctl
