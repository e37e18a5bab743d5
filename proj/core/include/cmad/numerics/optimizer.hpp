// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "cmad/numerics/parameter.hpp"

namespace cmad {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Only parameters with trainable == true are touched.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  /// Applies one update and consumes the gradients (they are zeroed afterwards).
  /// Throws StateError when no trainable parameter received a gradient since the last step.
  void step(ParameterStore<T>& params, double lr);

  std::size_t step_count() const noexcept { return step_; }
  void set_step_count(std::size_t step) noexcept { step_ = step; }
  const AdamOptions& options() const noexcept { return options_; }

  std::map<std::string, Tensor<T>>& first_moments() noexcept { return m_; }
  std::map<std::string, Tensor<T>>& second_moments() noexcept { return v_; }
  const std::map<std::string, Tensor<T>>& first_moments() const noexcept { return m_; }
  const std::map<std::string, Tensor<T>>& second_moments() const noexcept { return v_; }

 private:
  AdamOptions options_;
  std::size_t step_ = 0;
  std::map<std::string, Tensor<T>> m_;
  std::map<std::string, Tensor<T>> v_;
};

/// Linear ramp from 0 to base_lr over warmup_steps, constant afterwards.
double lr_schedule(std::size_t step, std::size_t warmup_steps, double base_lr);

/// Rescales trainable gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(ParameterStore<T>& params, double max_norm);

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace cmad
