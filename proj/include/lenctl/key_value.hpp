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
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lenctl {

/// Ordered `key=value` lines. Used for checkpoint headers and experiment
/// plan files. Lines starting with '#' are comments.
class KeyValues {
 public:
  void set(std::string key, std::string value);
  void set(std::string key, double value);  // round-trip precision
  void set(std::string key, std::int64_t value);
  void set(std::string key, bool value);

  bool contains(std::string_view key) const;
  std::optional<std::string> find(std::string_view key) const;
  /// Throws FormatError when missing or unparsable.
  std::string get_string(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key) const;
  bool get_bool(std::string_view key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  /// Writes `key=value\n` for every entry.
  void write(std::ostream& os) const;
  /// Reads until EOF or, when `stop_at_blank`, the first empty line.
  /// `line_offset` is added to reported line numbers.
  static KeyValues read(std::istream& is, bool stop_at_blank,
                        std::size_t line_offset = 0);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace lenctl
