// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cmad {

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Parses `key=value` lines. Blank lines and lines starting with '#' are skipped; whitespace
/// around keys and values is trimmed. Duplicate keys and lines without '=' are ConfigErrors.
std::vector<KeyValue> parse_key_values(std::string_view text, std::string_view source = "<config>");

std::size_t parse_size(const KeyValue& kv);
double parse_real(const KeyValue& kv);
bool parse_bool(const KeyValue& kv);

std::string read_text_file(const std::string& path);

}  // namespace cmad
