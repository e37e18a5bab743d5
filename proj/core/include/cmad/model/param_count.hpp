// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "cmad/model/config.hpp"

namespace cmad {

enum class EncoderMode {
  shared,  // encoder blocks reference the decoder's weights
  copy,    // encoder blocks are frozen duplicates and add to the total
};

struct ParameterCount {
  std::size_t total = 0;
  std::size_t trainable = 0;
  double fraction() const noexcept {
    return total ? static_cast<double>(trainable) / static_cast<double>(total) : 0.0;
  }
};

/// Exact parameter counts of AdaptedModel::build(config) without allocating it.
ParameterCount count_parameters(const ModelConfig& config, EncoderMode mode = EncoderMode::shared);

/// N=48, d_model=2048, 32 heads, T_max=1000, V=2048, k1=k2=12, with the given L.
ModelConfig full_scale_config(std::size_t adapted_layers);

}  // namespace cmad
