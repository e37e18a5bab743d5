// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Scalar loops shared by the differentiable tape and the incremental decoder.
// Every routine accumulates in a fixed order so results are reproducible bit for bit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace cmad::kernels {

/// C[m×n] (+)= A[m×k] · B[k×n]
template <typename T>
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b, T* c,
             bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T{0});
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

/// C[m×n] (+)= A[m×k] · B[n×k]^T
template <typename T>
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b, T* c,
             bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T s{0};
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c[i * n + j] = accumulate ? c[i * n + j] + s : s;
    }
  }
}

/// C[m×n] (+)= A[k×m]^T · B[k×n]
template <typename T>
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b, T* c,
             bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T{0});
  for (std::size_t p = 0; p < k; ++p) {
    const T* arow = a + p * m;
    const T* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = arow[i];
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

/// Softmax over the first `valid` entries of a row; entries past `valid` are set to zero.
template <typename T>
void softmax_row(const T* in, T* out, std::size_t n, std::size_t valid) {
  T mx = -std::numeric_limits<T>::infinity();
  for (std::size_t j = 0; j < valid; ++j) mx = std::max(mx, in[j]);
  T sum{0};
  for (std::size_t j = 0; j < valid; ++j) {
    out[j] = std::exp(in[j] - mx);
    sum += out[j];
  }
  const T inv = T{1} / sum;
  for (std::size_t j = 0; j < valid; ++j) out[j] *= inv;
  for (std::size_t j = valid; j < n; ++j) out[j] = T{0};
}

/// Normalizes one row; writes the normalized (pre-affine) values to `xhat` when non-null.
template <typename T>
void layer_norm_row(const T* x, const T* gain, const T* bias, T* out, T* xhat, std::size_t n,
                    T eps, T* mean_out, T* rstd_out) {
  T mean{0};
  for (std::size_t j = 0; j < n; ++j) mean += x[j];
  mean /= static_cast<T>(n);
  T var{0};
  for (std::size_t j = 0; j < n; ++j) {
    const T d = x[j] - mean;
    var += d * d;
  }
  var /= static_cast<T>(n);
  const T rstd = T{1} / std::sqrt(var + eps);
  for (std::size_t j = 0; j < n; ++j) {
    const T h = (x[j] - mean) * rstd;
    if (xhat) xhat[j] = h;
    out[j] = h * gain[j] + bias[j];
  }
  if (mean_out) *mean_out = mean;
  if (rstd_out) *rstd_out = rstd;
}

template <typename T>
inline T gelu(T x) {
  const T c = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  const T u = c * (x + static_cast<T>(0.044715) * x * x * x);
  return static_cast<T>(0.5) * x * (T{1} + std::tanh(u));
}

template <typename T>
inline T gelu_grad(T x) {
  const T c = static_cast<T>(0.7978845608028654);
  const T x2 = x * x;
  const T u = c * (x + static_cast<T>(0.044715) * x2 * x);
  const T th = std::tanh(u);
  const T du = c * (T{1} + static_cast<T>(3 * 0.044715) * x2);
  return static_cast<T>(0.5) * (T{1} + th) + static_cast<T>(0.5) * x * (T{1} - th * th) * du;
}

}  // namespace cmad::kernels
