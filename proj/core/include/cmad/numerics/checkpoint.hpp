// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Checkpoint container layout (all integers little-endian):
//   "CMAD" | u32 version | u32 tensor count |
//   per tensor: u32 name length, UTF-8 name, u32 rank, rank × u64 extents, f32 payload

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cmad/numerics/parameter.hpp"

namespace cmad {

inline constexpr char kCheckpointMagic[4] = {'C', 'M', 'A', 'D'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor<float> tensor;
};

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

template <typename T>
std::vector<NamedTensor> snapshot_parameters(const ParameterStore<T>& params);

/// Copies values into `params`. The set of names and every shape must match exactly.
template <typename T>
void restore_parameters(ParameterStore<T>& params, const std::vector<NamedTensor>& tensors);

}  // namespace cmad
