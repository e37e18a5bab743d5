// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cmad/numerics/tape.hpp"

/// Differentiable primitives over 2-D row-major tensors (row-vector convention).
namespace cmad::ops {

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b);
/// a · bᵀ
template <typename T>
Var<T> matmul_nt(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> transpose(const Var<T>& a);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> scale(const Var<T>& a, T factor);
/// Multiplies every element of `a` by the single-element tensor `s`.
template <typename T>
Var<T> scale_by(const Var<T>& a, const Var<T>& s);

/// Row-wise softmax with max subtraction. With `causal`, row i only sees columns 0..i.
template <typename T>
Var<T> softmax_rows(const Var<T>& x, bool causal = false);
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias, T eps = T(1e-5));
template <typename T>
Var<T> gelu(const Var<T>& x);

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts);
template <typename T>
Var<T> slice_cols(const Var<T>& a, std::size_t begin, std::size_t end);
template <typename T>
Var<T> slice_rows(const Var<T>& a, std::size_t begin, std::size_t end);
/// Stacks `row` (1×n or n) `count` times into count×n.
template <typename T>
Var<T> repeat_row(const Var<T>& row, std::size_t count);
/// Row i of the result is `replacement` where mask[i] is set, otherwise row i of `a`.
template <typename T>
Var<T> mask_rows(const Var<T>& a, const Var<T>& replacement, std::span<const std::uint8_t> mask);

template <typename T>
Var<T> embedding_lookup(const Var<T>& table, std::span<const int> indices);

/// Mean over rows of -log softmax(logits)[t, targets[t]]; returns a {1} tensor.
template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::span<const int> targets);

/// Sum of all elements; returns a {1} tensor.
template <typename T>
Var<T> sum(const Var<T>& a);

}  // namespace cmad::ops
