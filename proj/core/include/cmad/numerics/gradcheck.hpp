// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <string>

#include "cmad/numerics/tape.hpp"

namespace cmad {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  /// Max relative error per parameter name.
  std::map<std::string, double> per_parameter;
  /// Largest analytic |gradient| per parameter name (to confirm coverage).
  std::map<std::string, double> max_abs_grad;
};

/// Builds the scalar loss on a fresh tape; must be deterministic in the parameter values.
using LossBuilder = std::function<Var<double>(Tape<double>&)>;

/// Compares analytic gradients of every trainable parameter against central differences
/// (f(θ+ε) − f(θ−ε)) / 2ε. Relative error uses max(|analytic|, |numeric|, 1e-8) as the
/// denominator. Throws DeterminismError if two unperturbed evaluations disagree.
GradCheckResult finite_diff_check(const LossBuilder& loss, ParameterStore<double>& params,
                                  double epsilon = 1e-5);

}  // namespace cmad
