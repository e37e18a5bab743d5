// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/numerics/tape.hpp"

#include <string>

namespace cmad {

template <typename T>
Var<T> Tape<T>::push(Node node) {
  if (backward_done_) throw StateError("tape already consumed by backward(); record a new forward pass");
  if (!node.value.all_finite()) {
    throw NumericError("non-finite value produced by tape operation #" + std::to_string(nodes_.size()) +
                       " (shape " + shape_string(node.value.shape()) + ")");
  }
  if (!node.requires_grad) node.backward = nullptr;
  nodes_.push_back(std::move(node));
  return Var<T>(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::input(Tensor<T> value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::parameter(Parameter<T>& p) {
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return Var<T>(this, it->second);
  Node n;
  n.value = p.value;
  n.requires_grad = p.trainable;
  n.param = p.trainable ? &p : nullptr;
  Var<T> v = push(std::move(n));
  param_ids_.emplace(&p, v.id());
  return v;
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn) {
  bool rg = false;
  for (const auto& v : inputs) rg = rg || nodes_[v.id()].requires_grad;
  return record(std::move(value), rg, std::move(fn));
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, bool requires_grad, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backward = std::move(fn);
  return push(std::move(n));
}

template <typename T>
Tensor<T>* Tape<T>::grad_slot(const Var<T>& v) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
  return &n.grad;
}

template <typename T>
const Tensor<T>& Tape<T>::grad(const Var<T>& v) const {
  const Node& n = nodes_[v.id()];
  if (!backward_done_) throw StateError("grad() requested before backward()");
  if (!n.requires_grad) throw StateError("grad() requested for a node that does not require gradients");
  if (n.grad.empty()) {
    // Unreached by the loss: report an explicit zero.
    const_cast<Node&>(n).grad = Tensor<T>(n.value.shape());
  }
  return n.grad;
}

template <typename T>
void Tape<T>::backward(const Var<T>& loss, T seed) {
  if (backward_done_) throw StateError("backward() called twice on the same tape");
  Node& root = nodes_[loss.id()];
  if (root.value.size() != 1) {
    throw DimensionError("backward() needs a single-element loss, got shape " +
                         shape_string(root.value.shape()));
  }
  backward_done_ = true;
  if (!root.requires_grad) return;
  root.grad = Tensor<T>(root.value.shape());
  root.grad[0] = seed;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param) {
      auto& pg = n.param->grad;
      for (std::size_t j = 0; j < pg.size(); ++j) pg[j] += n.grad[j];
      n.param->grad_populated = true;
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace cmad
