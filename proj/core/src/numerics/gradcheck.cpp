// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace cmad {
namespace {

double evaluate(const LossBuilder& loss) {
  Tape<double> tape;
  return loss(tape).value()[0];
}

}  // namespace

GradCheckResult finite_diff_check(const LossBuilder& loss, ParameterStore<double>& params, double epsilon) {
  params.zero_grad();
  {
    Tape<double> tape;
    Var<double> l = loss(tape);
    tape.backward(l);
  }
  const double base_a = evaluate(loss);
  const double base_b = evaluate(loss);
  if (base_a != base_b) {
    throw DeterminismError("loss is not deterministic: two forward passes gave " + std::to_string(base_a) +
                           " and " + std::to_string(base_b));
  }

  GradCheckResult result;
  params.for_each([&](Parameter<double>& p) {
    if (!p.trainable) return;
    double worst = 0.0, max_grad = 0.0;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + epsilon;
      const double plus = evaluate(loss);
      p.value[i] = saved - epsilon;
      const double minus = evaluate(loss);
      p.value[i] = saved;

      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double analytic = p.grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.checked;
      max_grad = std::max(max_grad, std::abs(analytic));
      worst = std::max(worst, rel);
      if (rel > result.max_rel_error || result.checked == 1) {
        result.max_rel_error = rel;
        result.worst_parameter = p.name;
        result.worst_index = i;
        result.worst_analytic = analytic;
        result.worst_numeric = numeric;
      }
    }
    result.per_parameter[p.name] = worst;
    result.max_abs_grad[p.name] = max_grad;
  });
  params.zero_grad();
  return result;
}

}  // namespace cmad
