// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "cmad/model/config.hpp"
#include "cmad/numerics/gradcheck.hpp"

namespace cmad {

struct ModelGradCheckOptions {
  std::size_t frames = 6;
  /// Standard deviation of every initial weight. Larger than the training default so that
  /// gradients sit well above the relative-error floor.
  double init_scale = 0.3;
  /// Gates start here instead of zero so every adaptor parameter influences the loss.
  double gate_value = 0.5;
  double epsilon = 1e-5;
  std::uint64_t seed = 0;
};

/// 2 layers, d_model 16, 2 heads, V 8, T_max 6, L 2.
ModelConfig gradcheck_config();

/// Finite-difference check of the adapted-model loss in 64-bit mode over all adaptor parameters.
/// The condition uses random chords, piano roll and drum tokens with per-frame masking, so
/// both projections and both mask embeddings receive gradient.
GradCheckResult check_model_gradients(const ModelConfig& config, const ModelGradCheckOptions& options);

}  // namespace cmad
