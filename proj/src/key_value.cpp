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

#include "lenctl/key_value.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>

#include "lenctl/errors.hpp"

namespace lenctl {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void KeyValues::set(std::string key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

void KeyValues::set(std::string key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  set(std::move(key), std::string(buf));
}

void KeyValues::set(std::string key, std::int64_t value) {
  set(std::move(key), std::to_string(value));
}

void KeyValues::set(std::string key, bool value) {
  set(std::move(key), std::string(value ? "true" : "false"));
}

bool KeyValues::contains(std::string_view key) const {
  return find(key).has_value();
}

std::optional<std::string> KeyValues::find(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string KeyValues::get_string(std::string_view key) const {
  auto v = find(key);
  if (!v) throw FormatError("missing key '" + std::string(key) + "'");
  return *v;
}

double KeyValues::get_double(std::string_view key) const {
  const std::string v = get_string(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw FormatError("key '" + std::string(key) + "': not a number: " + v);
  }
}

std::int64_t KeyValues::get_int(std::string_view key) const {
  const std::string v = get_string(key);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw FormatError("key '" + std::string(key) + "': not an integer: " + v);
  }
  return out;
}

std::uint64_t KeyValues::get_uint(std::string_view key) const {
  const std::string v = get_string(key);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw FormatError("key '" + std::string(key) + "': not an unsigned integer: " + v);
  }
  return out;
}

bool KeyValues::get_bool(std::string_view key) const {
  const std::string v = get_string(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw FormatError("key '" + std::string(key) + "': not a boolean: " + v);
}

void KeyValues::write(std::ostream& os) const {
  for (const auto& [k, v] : entries_) os << k << '=' << v << '\n';
}

KeyValues KeyValues::read(std::istream& is, bool stop_at_blank,
                          std::size_t line_offset) {
  KeyValues kv;
  std::string line;
  std::size_t lineno = line_offset;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (stop_at_blank) break;
      continue;
    }
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw FormatError("expected key=value, got '" + t + "'", lineno);
    }
    kv.set(trim(std::string_view(t).substr(0, eq)),
           trim(std::string_view(t).substr(eq + 1)));
  }
  return kv;
}

}  // namespace lenctl
