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

#include "lenctl/corpus.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "lenctl/errors.hpp"
#include "lenctl/model.hpp"
#include "lenctl/rng.hpp"

namespace lenctl {

namespace {

constexpr int kMaxRedraws = 100;
constexpr const char* kCorpusHeader =
    "# lenctl corpus v1; reserved ids: 0=pad 1=begin 2=end 3=marker; "
    "content ids from 4";

std::int64_t draw_length(const LengthDistribution& dist, std::mt19937_64& rng) {
  if (dist.sd <= 0.0) {
    return std::clamp<std::int64_t>(std::llround(dist.mean), dist.min, dist.max);
  }
  std::normal_distribution<double> normal(dist.mean, dist.sd);
  for (int i = 0; i < 100000; ++i) {
    const auto l = static_cast<std::int64_t>(std::llround(normal(rng)));
    if (l >= dist.min && l <= dist.max) return l;
  }
  throw ConfigError("length distribution has negligible mass inside [min, max]");
}

}  // namespace

std::string_view to_string(CorpusTask task) {
  return task == CorpusTask::kPrefixCopy ? "prefix_copy" : "marked_extract";
}

CorpusTask parse_task(std::string_view text) {
  if (text == "prefix_copy" || text == "PREFIX_COPY") return CorpusTask::kPrefixCopy;
  if (text == "marked_extract" || text == "MARKED_EXTRACT") {
    return CorpusTask::kMarkedExtract;
  }
  throw ConfigError("unknown task '" + std::string(text) + "'");
}

void CorpusSpec::validate() const {
  if (vocab_size <= kFirstContentId) {
    throw ConfigError("vocab_size must exceed the reserved ids (> 4)");
  }
  if (n_examples < 0) throw ConfigError("n_examples must be >= 0");
  if (source_min < 1 || source_max < source_min) {
    throw ConfigError("source length range must satisfy 1 <= min <= max");
  }
  if (length.min < 1 || length.max < length.min) {
    throw ConfigError("length range must satisfy 1 <= min <= max");
  }
  if (task == CorpusTask::kPrefixCopy && length.max > source_min) {
    throw ConfigError("prefix_copy needs length max (" +
                      std::to_string(length.max) + ") <= source min (" +
                      std::to_string(source_min) + ")");
  }
  if (!(marker_rate >= 0.0 && marker_rate <= 1.0)) {
    throw ConfigError("marker_rate must lie in [0, 1]");
  }
}

void TrainingExample::validate() const {
  if (target.empty() || target.back() != kEndId) {
    throw FormatError("target must end with the end token");
  }
  if (l != static_cast<std::int64_t>(target.size()) - 1) {
    throw FormatError("l = " + std::to_string(l) + " but target has " +
                      std::to_string(target.size() - 1) + " non-end tokens");
  }
  if (l < 1) throw FormatError("target length must be >= 1");
  if (source.empty()) throw FormatError("empty source");
}

std::vector<std::int32_t> TrainingExample::decoder_input() const {
  std::vector<std::int32_t> in;
  in.reserve(target.size());
  in.push_back(kBeginId);
  in.insert(in.end(), target.begin(), target.end() - 1);
  return in;
}

TrainingExample prefix_copy_example(std::vector<std::int32_t> source,
                                    std::int64_t l) {
  if (l < 1 || l > static_cast<std::int64_t>(source.size())) {
    throw std::invalid_argument("prefix_copy: l = " + std::to_string(l) +
                                " not realizable from a source of " +
                                std::to_string(source.size()) + " tokens");
  }
  TrainingExample ex;
  ex.l = l;
  ex.target.assign(source.begin(), source.begin() + l);
  ex.target.push_back(kEndId);
  ex.source = std::move(source);
  return ex;
}

TrainingExample marked_extract_example(std::vector<std::int32_t> source,
                                       std::int64_t l) {
  if (l < 1) throw std::invalid_argument("marked_extract: l must be >= 1");
  TrainingExample ex;
  ex.l = l;
  for (std::size_t i = 0; i + 1 < source.size() &&
                          static_cast<std::int64_t>(ex.target.size()) < l;
       ++i) {
    if (source[i] == kMarkerId) ex.target.push_back(source[i + 1]);
  }
  if (static_cast<std::int64_t>(ex.target.size()) < l) {
    throw std::invalid_argument("marked_extract: source has " +
                                std::to_string(ex.target.size()) +
                                " marked tokens, need " + std::to_string(l));
  }
  ex.target.push_back(kEndId);
  ex.source = std::move(source);
  return ex;
}

namespace {

std::int64_t count_marked(const std::vector<std::int32_t>& source) {
  std::int64_t n = 0;
  for (std::size_t i = 0; i + 1 < source.size(); ++i) {
    if (source[i] == kMarkerId) ++n;
  }
  return n;
}

}  // namespace

TrainingExample generate_example(const CorpusSpec& spec, std::uint64_t index) {
  std::mt19937_64 rng(derive_seed(spec.rng_seed, index));
  std::uniform_int_distribution<std::int64_t> src_len(spec.source_min,
                                                      spec.source_max);
  std::uniform_int_distribution<std::int32_t> content(kFirstContentId,
                                                      spec.vocab_size - 1);
  std::bernoulli_distribution marked(spec.marker_rate);
  const std::int64_t l = draw_length(spec.length, rng);
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    const std::int64_t n = src_len(rng);
    std::vector<std::int32_t> source;
    source.reserve(static_cast<std::size_t>(n));
    if (spec.task == CorpusTask::kPrefixCopy) {
      if (n < l) continue;
      for (std::int64_t i = 0; i < n; ++i) source.push_back(content(rng));
      return prefix_copy_example(std::move(source), l);
    }
    while (static_cast<std::int64_t>(source.size()) < n) {
      const bool room = static_cast<std::int64_t>(source.size()) + 2 <= n;
      if (room && marked(rng)) source.push_back(kMarkerId);
      source.push_back(content(rng));
    }
    if (count_marked(source) < l) continue;
    return marked_extract_example(std::move(source), l);
  }
  throw std::runtime_error("example " + std::to_string(index) +
                           ": could not draw a source supporting l = " +
                           std::to_string(l) + " after " +
                           std::to_string(kMaxRedraws) + " attempts");
}

std::vector<TrainingExample> generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  std::vector<TrainingExample> out;
  out.reserve(static_cast<std::size_t>(spec.n_examples));
  for (std::int64_t i = 0; i < spec.n_examples; ++i) {
    out.push_back(generate_example(spec, static_cast<std::uint64_t>(i)));
  }
  return out;
}

void write_corpus(std::ostream& os, std::span<const TrainingExample> examples) {
  os << kCorpusHeader << '\n';
  for (const auto& ex : examples) {
    nlohmann::ordered_json j;
    j["source"] = ex.source;
    j["target"] = ex.target;
    j["l"] = ex.l;
    os << j.dump() << '\n';
  }
}

std::vector<TrainingExample> read_corpus(std::istream& is) {
  std::vector<TrainingExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    TrainingExample ex;
    try {
      const auto j = nlohmann::json::parse(line);
      ex.source = j.at("source").get<std::vector<std::int32_t>>();
      ex.target = j.at("target").get<std::vector<std::int32_t>>();
      ex.l = j.at("l").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed record: ") + e.what(), lineno);
    }
    try {
      ex.validate();
    } catch (const FormatError& e) {
      throw FormatError(e.what(), lineno);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

void write_corpus(const std::filesystem::path& path,
                  std::span<const TrainingExample> examples) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  write_corpus(os, examples);
}

std::vector<TrainingExample> read_corpus(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open corpus " + path.string());
  return read_corpus(is);
}

CorpusSplit split_corpus(std::vector<TrainingExample> examples,
                         std::size_t n_validation, std::size_t n_test) {
  if (n_validation + n_test > examples.size()) {
    throw std::invalid_argument("split sizes exceed corpus size");
  }
  CorpusSplit s;
  const std::size_t n_train = examples.size() - n_validation - n_test;
  auto it = std::make_move_iterator(examples.begin());
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(it + static_cast<std::ptrdiff_t>(n_train),
                      it + static_cast<std::ptrdiff_t>(n_train + n_validation));
  s.test.assign(it + static_cast<std::ptrdiff_t>(n_train + n_validation),
                std::make_move_iterator(examples.end()));
  return s;
}

}  // namespace lenctl
