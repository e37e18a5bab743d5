// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/numerics/optimizer.hpp"

#include <cmath>

namespace cmad {

template <typename T>
void Adam<T>::step(ParameterStore<T>& params, double lr) {
  bool any = false;
  params.for_each([&](const Parameter<T>& p) { any = any || (p.trainable && p.grad_populated); });
  if (!any) throw StateError("Adam::step: no trainable parameter has a populated gradient");

  ++step_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  params.for_each([&](Parameter<T>& p) {
    if (!p.trainable) return;
    auto [mit, mnew] = m_.try_emplace(p.name, Tensor<T>(p.value.shape()));
    auto [vit, vnew] = v_.try_emplace(p.name, Tensor<T>(p.value.shape()));
    auto& m = mit->second;
    auto& v = vit->second;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      const double mi = b1 * m[i] + (1.0 - b1) * g;
      const double vi = b2 * v[i] + (1.0 - b2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double update = lr * (mi / c1) / (std::sqrt(vi / c2) + options_.eps);
      p.value[i] = static_cast<T>(p.value[i] - update);
    }
    p.zero_grad();
  });
}

double lr_schedule(std::size_t step, std::size_t warmup_steps, double base_lr) {
  if (warmup_steps == 0 || step >= warmup_steps) return base_lr;
  return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
}

template <typename T>
double clip_grad_norm(ParameterStore<T>& params, double max_norm) {
  double sq = 0.0;
  params.for_each([&](const Parameter<T>& p) {
    if (!p.trainable) return;
    for (auto g : p.grad.values()) sq += static_cast<double>(g) * g;
  });
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    params.for_each([&](Parameter<T>& p) {
      if (!p.trainable) return;
      for (auto& g : p.grad.values()) g = static_cast<T>(g * s);
    });
  }
  return norm;
}

template class Adam<float>;
template class Adam<double>;
template double clip_grad_norm(ParameterStore<float>&, double);
template double clip_grad_norm(ParameterStore<double>&, double);

}  // namespace cmad
