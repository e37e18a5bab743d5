// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <span>
#include <string>

#include "cmad/numerics/parameter.hpp"

namespace cmad {

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::span<const unsigned char> bytes);

template <typename T>
std::string tensor_sha256(const Tensor<T>& t) {
  const auto* p = reinterpret_cast<const unsigned char*>(t.data());
  return sha256_hex({p, t.size() * sizeof(T)});
}

/// SHA-256 of every frozen parameter's value bytes, keyed by name.
template <typename T>
std::map<std::string, std::string> frozen_checksums(const ParameterStore<T>& params) {
  std::map<std::string, std::string> out;
  params.for_each([&](const Parameter<T>& p) {
    if (!p.trainable) out.emplace(p.name, tensor_sha256(p.value));
  });
  return out;
}

}  // namespace cmad
