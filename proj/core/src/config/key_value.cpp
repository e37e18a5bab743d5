// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/config/key_value.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "cmad/errors.hpp"

namespace cmad {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<KeyValue> parse_key_values(std::string_view text, std::string_view source) {
  std::vector<KeyValue> out;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("{}:{}: expected key=value, got '{}'", source, lineno, line));
    }
    KeyValue kv{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), lineno};
    if (kv.key.empty()) throw ConfigError(fmt::format("{}:{}: empty key", source, lineno));
    if (!seen.insert(kv.key).second) {
      throw ConfigError(fmt::format("{}:{}: duplicate key '{}'", source, lineno, kv.key));
    }
    out.push_back(std::move(kv));
  }
  return out;
}

std::size_t parse_size(const KeyValue& kv) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(kv.value.data(), kv.value.data() + kv.value.size(), v);
  if (ec != std::errc{} || ptr != kv.value.data() + kv.value.size()) {
    throw ConfigError(fmt::format("line {}: '{}' expects a non-negative integer, got '{}'", kv.line, kv.key, kv.value));
  }
  return v;
}

double parse_real(const KeyValue& kv) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(kv.value.data(), kv.value.data() + kv.value.size(), v);
  if (ec != std::errc{} || ptr != kv.value.data() + kv.value.size() || !std::isfinite(v)) {
    throw ConfigError(fmt::format("line {}: '{}' expects a number, got '{}'", kv.line, kv.key, kv.value));
  }
  return v;
}

bool parse_bool(const KeyValue& kv) {
  if (kv.value == "true" || kv.value == "1") return true;
  if (kv.value == "false" || kv.value == "0") return false;
  throw ConfigError(fmt::format("line {}: '{}' expects true/false, got '{}'", kv.line, kv.key, kv.value));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cmad
