// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <unordered_map>

#include "cmad/numerics/parameter.hpp"
#include "cmad/numerics/tensor.hpp"

namespace cmad {

template <typename T>
class Tape;

/// Handle to a value recorded on a Tape.
template <typename T>
class Var {
 public:
  Var() = default;

  Tape<T>& tape() const { return *tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  friend class Tape<T>;
  Var(Tape<T>* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape<T>* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Records operations in execution order and replays them in reverse to accumulate gradients.
///
/// Node ids are assigned in creation order, which is a topological order of the graph, so the
/// reverse sweep visits every node exactly once after all of its consumers. A tape supports a
/// single backward pass.
template <typename T>
class Tape {
 public:
  /// Receives the gradient of the node's output; pushes contributions to its inputs.
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value);
  /// A leaf whose gradient can be read back with grad() after backward().
  Var<T> input(Tensor<T> value, bool requires_grad = true);
  /// A leaf bound to a parameter; trainable parameters receive their gradient on backward().
  /// Requesting the same parameter twice returns the same node.
  Var<T> parameter(Parameter<T>& p);

  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn);
  Var<T> record(Tensor<T> value, bool requires_grad, BackwardFn fn);

  void backward(const Var<T>& loss, T seed = T{1});
  bool backward_done() const noexcept { return backward_done_; }

  const Tensor<T>& value(std::uint32_t id) const { return nodes_[id].value; }
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  const Tensor<T>& grad(const Var<T>& v) const;

  /// Gradient accumulator of an input during backward, or nullptr when it needs none.
  Tensor<T>* grad_slot(const Var<T>& v);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter<T>* param = nullptr;
  };

  Var<T> push(Node node);

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter<T>*, std::uint32_t> param_ids_;
  bool backward_done_ = false;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return tape_->value(id_);
}

template <typename T>
bool Var<T>::requires_grad() const {
  return tape_->requires_grad(id_);
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace cmad
