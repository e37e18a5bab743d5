// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/numerics/ops.hpp"

#include <cmath>
#include <string>

#include "cmad/numerics/kernels.hpp"

namespace cmad::ops {
namespace {

template <typename T>
void require_matrix(const Var<T>& v, const char* op) {
  if (v.value().rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a 2-D tensor, got " + shape_string(v.shape()));
  }
}

template <typename T>
void require_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

template <typename T>
void accumulate(Tensor<T>* dst, const Tensor<T>& src) {
  if (!dst) return;
  for (std::size_t i = 0; i < src.size(); ++i) (*dst)[i] += src[i];
}

}  // namespace

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner dimensions disagree: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Tensor<T> out({m, n});
  kernels::gemm_nn(m, k, n, a.value().data(), b.value().data(), out.data(), false);
  return a.tape().record(std::move(out), {a, b}, [a, b, m, k, n](Tape<T>& tape, const Tensor<T>& g) {
    if (auto* da = tape.grad_slot(a)) kernels::gemm_nt(m, n, k, g.data(), b.value().data(), da->data(), true);
    if (auto* db = tape.grad_slot(b)) kernels::gemm_tn(k, m, n, a.value().data(), g.data(), db->data(), true);
  });
}

template <typename T>
Var<T> matmul_nt(const Var<T>& a, const Var<T>& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
  if (b.shape()[1] != k) {
    throw DimensionError("matmul_nt: inner dimensions disagree: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()) + "^T");
  }
  Tensor<T> out({m, n});
  kernels::gemm_nt(m, k, n, a.value().data(), b.value().data(), out.data(), false);
  return a.tape().record(std::move(out), {a, b}, [a, b, m, k, n](Tape<T>& tape, const Tensor<T>& g) {
    if (auto* da = tape.grad_slot(a)) kernels::gemm_nn(m, n, k, g.data(), b.value().data(), da->data(), true);
    if (auto* db = tape.grad_slot(b)) kernels::gemm_tn(n, m, k, g.data(), a.value().data(), db->data(), true);
  });
}

template <typename T>
Var<T> transpose(const Var<T>& a) {
  require_matrix(a, "transpose");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor<T> out({n, m});
  const auto& x = a.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(j, i) = x(i, j);
  return a.tape().record(std::move(out), {a}, [a, m, n](Tape<T>& tape, const Tensor<T>& g) {
    auto* da = tape.grad_slot(a);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) (*da)(i, j) += g(j, i);
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a, b, "add");
  Tensor<T> out = a.value();
  const auto& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>& g) {
    accumulate(tape.grad_slot(a), g);
    accumulate(tape.grad_slot(b), g);
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a, b, "mul");
  Tensor<T> out = a.value();
  const auto& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>& g) {
    if (auto* da = tape.grad_slot(a)) {
      const auto& y = b.value();
      for (std::size_t i = 0; i < g.size(); ++i) (*da)[i] += g[i] * y[i];
    }
    if (auto* db = tape.grad_slot(b)) {
      const auto& x = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) (*db)[i] += g[i] * x[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  Tensor<T> out = a.value();
  for (auto& v : out.values()) v *= factor;
  return a.tape().record(std::move(out), {a}, [a, factor](Tape<T>& tape, const Tensor<T>& g) {
    auto* da = tape.grad_slot(a);
    for (std::size_t i = 0; i < g.size(); ++i) (*da)[i] += g[i] * factor;
  });
}

template <typename T>
Var<T> scale_by(const Var<T>& a, const Var<T>& s) {
  if (s.value().size() != 1) {
    throw DimensionError("scale_by: factor must hold one element, got " + shape_string(s.shape()));
  }
  const T f = s.value()[0];
  Tensor<T> out = a.value();
  for (auto& v : out.values()) v *= f;
  return a.tape().record(std::move(out), {a, s}, [a, s](Tape<T>& tape, const Tensor<T>& g) {
    if (auto* da = tape.grad_slot(a)) {
      const T f = s.value()[0];
      for (std::size_t i = 0; i < g.size(); ++i) (*da)[i] += g[i] * f;
    }
    if (auto* ds = tape.grad_slot(s)) {
      const auto& x = a.value();
      T acc{0};
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * x[i];
      (*ds)[0] += acc;
    }
  });
}

template <typename T>
Var<T> softmax_rows(const Var<T>& x, bool causal) {
  require_matrix(x, "softmax_rows");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  Tensor<T> out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t valid = causal ? std::min(n, i + 1) : n;
    kernels::softmax_row(x.value().data() + i * n, out.data() + i * n, n, valid);
  }
  if (!x.requires_grad()) return x.tape().record(std::move(out), false, nullptr);
  Tensor<T> vals = out;
  return x.tape().record(std::move(out), true, [x, m, n, vals = std::move(vals)](Tape<T>& tape, const Tensor<T>& g) {
    auto* dx = tape.grad_slot(x);
    for (std::size_t i = 0; i < m; ++i) {
      const T* yr = vals.data() + i * n;
      const T* gr = g.data() + i * n;
      T dot{0};
      for (std::size_t j = 0; j < n; ++j) dot += gr[j] * yr[j];
      T* dr = dx->data() + i * n;
      for (std::size_t j = 0; j < n; ++j) dr[j] += yr[j] * (gr[j] - dot);
    }
  });
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias, T eps) {
  require_matrix(x, "layer_norm");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (gain.value().size() != n || bias.value().size() != n) {
    throw DimensionError("layer_norm: gain/bias length must equal " + std::to_string(n));
  }
  Tensor<T> out({m, n});
  std::vector<T> xhat(m * n), rstd(m);
  for (std::size_t i = 0; i < m; ++i) {
    kernels::layer_norm_row(x.value().data() + i * n, gain.value().data(), bias.value().data(),
                            out.data() + i * n, xhat.data() + i * n, n, eps, static_cast<T*>(nullptr),
                            &rstd[i]);
  }
  return x.tape().record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, m, n, xhat = std::move(xhat), rstd = std::move(rstd)](Tape<T>& tape, const Tensor<T>& g) {
        auto* dx = tape.grad_slot(x);
        auto* dg = tape.grad_slot(gain);
        auto* db = tape.grad_slot(bias);
        const T* gamma = gain.value().data();
        std::vector<T> dxhat(n);
        for (std::size_t i = 0; i < m; ++i) {
          const T* gr = g.data() + i * n;
          const T* hr = xhat.data() + i * n;
          if (dg)
            for (std::size_t j = 0; j < n; ++j) (*dg)[j] += gr[j] * hr[j];
          if (db)
            for (std::size_t j = 0; j < n; ++j) (*db)[j] += gr[j];
          if (!dx) continue;
          T mean_d{0}, mean_dh{0};
          for (std::size_t j = 0; j < n; ++j) {
            dxhat[j] = gr[j] * gamma[j];
            mean_d += dxhat[j];
            mean_dh += dxhat[j] * hr[j];
          }
          mean_d /= static_cast<T>(n);
          mean_dh /= static_cast<T>(n);
          T* dr = dx->data() + i * n;
          for (std::size_t j = 0; j < n; ++j) dr[j] += rstd[i] * (dxhat[j] - mean_d - hr[j] * mean_dh);
        }
      });
}

template <typename T>
Var<T> gelu(const Var<T>& x) {
  Tensor<T> out = x.value();
  for (auto& v : out.values()) v = kernels::gelu(v);
  return x.tape().record(std::move(out), {x}, [x](Tape<T>& tape, const Tensor<T>& g) {
    auto* dx = tape.grad_slot(x);
    const auto& in = x.value();
    for (std::size_t i = 0; i < g.size(); ++i) (*dx)[i] += g[i] * kernels::gelu_grad(in[i]);
  });
}

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts.front().shape()[0];
  std::size_t n = 0;
  bool rg = false;
  for (const auto& p : parts) {
    require_matrix(p, "concat_cols");
    if (p.shape()[0] != m) {
      throw DimensionError("concat_cols: row count mismatch " + shape_string(parts.front().shape()) + " vs " +
                           shape_string(p.shape()));
    }
    n += p.shape()[1];
    rg = rg || p.requires_grad();
  }
  Tensor<T> out({m, n});
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.shape()[1];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) out(i, off + j) = p.value()(i, j);
    off += w;
  }
  return parts.front().tape().record(std::move(out), rg, [parts, m, n](Tape<T>& tape, const Tensor<T>& g) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      const std::size_t w = p.shape()[1];
      if (auto* dp = tape.grad_slot(p)) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < w; ++j) (*dp)(i, j) += g.data()[i * n + off + j];
      }
      off += w;
    }
  });
}

template <typename T>
Var<T> slice_cols(const Var<T>& a, std::size_t begin, std::size_t end) {
  require_matrix(a, "slice_cols");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  if (begin >= end || end > n) {
    throw IndexError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for " + shape_string(a.shape()));
  }
  const std::size_t w = end - begin;
  Tensor<T> out({m, w});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) out(i, j) = a.value()(i, begin + j);
  return a.tape().record(std::move(out), {a}, [a, m, n, w, begin](Tape<T>& tape, const Tensor<T>& g) {
    auto* da = tape.grad_slot(a);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) da->data()[i * n + begin + j] += g(i, j);
  });
}

template <typename T>
Var<T> slice_rows(const Var<T>& a, std::size_t begin, std::size_t end) {
  require_matrix(a, "slice_rows");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  if (begin >= end || end > m) {
    throw IndexError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for " + shape_string(a.shape()));
  }
  std::vector<T> data(a.value().data() + begin * n, a.value().data() + end * n);
  Tensor<T> out({end - begin, n}, std::move(data));
  return a.tape().record(std::move(out), {a}, [a, n, begin](Tape<T>& tape, const Tensor<T>& g) {
    auto* da = tape.grad_slot(a);
    T* dst = da->data() + begin * n;
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

template <typename T>
Var<T> repeat_row(const Var<T>& row, std::size_t count) {
  if (row.value().rows() != 1) {
    throw DimensionError("repeat_row: expected a single row, got " + shape_string(row.shape()));
  }
  const std::size_t n = row.value().cols();
  Tensor<T> out({count, n});
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = row.value()[j];
  return row.tape().record(std::move(out), {row}, [row, count, n](Tape<T>& tape, const Tensor<T>& g) {
    auto* dr = tape.grad_slot(row);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = 0; j < n; ++j) (*dr)[j] += g(i, j);
  });
}

template <typename T>
Var<T> mask_rows(const Var<T>& a, const Var<T>& replacement, std::span<const std::uint8_t> mask) {
  require_matrix(a, "mask_rows");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  if (replacement.value().size() != n) {
    throw DimensionError("mask_rows: replacement length " + std::to_string(replacement.value().size()) +
                         " does not match row width " + std::to_string(n));
  }
  if (mask.size() != m) {
    throw DimensionError("mask_rows: mask length " + std::to_string(mask.size()) + " does not match " +
                         std::to_string(m) + " rows");
  }
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < m; ++i) {
    if (!mask[i]) continue;
    for (std::size_t j = 0; j < n; ++j) out(i, j) = replacement.value()[j];
  }
  std::vector<std::uint8_t> flags(mask.begin(), mask.end());
  return a.tape().record(std::move(out), {a, replacement},
                         [a, replacement, m, n, flags = std::move(flags)](Tape<T>& tape, const Tensor<T>& g) {
                           auto* da = tape.grad_slot(a);
                           auto* dr = tape.grad_slot(replacement);
                           for (std::size_t i = 0; i < m; ++i) {
                             if (flags[i]) {
                               if (dr)
                                 for (std::size_t j = 0; j < n; ++j) (*dr)[j] += g(i, j);
                             } else if (da) {
                               for (std::size_t j = 0; j < n; ++j) (*da)(i, j) += g(i, j);
                             }
                           }
                         });
}

template <typename T>
Var<T> embedding_lookup(const Var<T>& table, std::span<const int> indices) {
  require_matrix(table, "embedding_lookup");
  const std::size_t rows = table.shape()[0], n = table.shape()[1];
  if (indices.empty()) throw DimensionError("embedding_lookup: empty index list");
  std::vector<int> idx(indices.begin(), indices.end());
  for (int i : idx) {
    if (i < 0 || static_cast<std::size_t>(i) >= rows) {
      throw IndexError("embedding_lookup: index " + std::to_string(i) + " out of range [0, " +
                       std::to_string(rows) + ")");
    }
  }
  Tensor<T> out({idx.size(), n});
  for (std::size_t t = 0; t < idx.size(); ++t)
    for (std::size_t j = 0; j < n; ++j) out(t, j) = table.value()(static_cast<std::size_t>(idx[t]), j);
  return table.tape().record(std::move(out), {table}, [table, n, idx = std::move(idx)](Tape<T>& tape, const Tensor<T>& g) {
    auto* dt = tape.grad_slot(table);
    for (std::size_t t = 0; t < idx.size(); ++t)
      for (std::size_t j = 0; j < n; ++j) (*dt)(static_cast<std::size_t>(idx[t]), j) += g(t, j);
  });
}

template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::span<const int> targets) {
  require_matrix(logits, "cross_entropy");
  const std::size_t m = logits.shape()[0], v = logits.shape()[1];
  if (targets.size() != m) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(m) + " rows");
  }
  std::vector<int> tgt(targets.begin(), targets.end());
  for (int t : tgt) {
    if (t < 0 || static_cast<std::size_t>(t) >= v) {
      throw IndexError("cross_entropy: target " + std::to_string(t) + " out of range [0, " + std::to_string(v) + ")");
    }
  }
  Tensor<T> probs({m, v});
  T total{0};
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = logits.value().data() + i * v;
    kernels::softmax_row(row, probs.data() + i * v, v, v);
    T mx = row[0];
    for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, row[j]);
    T s{0};
    for (std::size_t j = 0; j < v; ++j) s += std::exp(row[j] - mx);
    total += (mx + std::log(s)) - row[tgt[i]];
  }
  const T loss = total / static_cast<T>(m);
  return logits.tape().record(Tensor<T>::scalar(loss), {logits},
                              [logits, m, v, tgt = std::move(tgt), probs = std::move(probs)](Tape<T>& tape, const Tensor<T>& g) {
                                auto* dl = tape.grad_slot(logits);
                                const T s = g[0] / static_cast<T>(m);
                                for (std::size_t i = 0; i < m; ++i) {
                                  for (std::size_t j = 0; j < v; ++j) (*dl)(i, j) += s * probs(i, j);
                                  (*dl)(i, static_cast<std::size_t>(tgt[i])) -= s;
                                }
                              });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  T s{0};
  for (auto v : a.value().values()) s += v;
  return a.tape().record(Tensor<T>::scalar(s), {a}, [a](Tape<T>& tape, const Tensor<T>& g) {
    auto* da = tape.grad_slot(a);
    for (auto& v : da->values()) v += g[0];
  });
}

#define CMAD_INSTANTIATE_OPS(T)                                                                   \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                                           \
  template Var<T> matmul_nt(const Var<T>&, const Var<T>&);                                        \
  template Var<T> transpose(const Var<T>&);                                                       \
  template Var<T> add(const Var<T>&, const Var<T>&);                                              \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                              \
  template Var<T> scale(const Var<T>&, T);                                                        \
  template Var<T> scale_by(const Var<T>&, const Var<T>&);                                         \
  template Var<T> softmax_rows(const Var<T>&, bool);                                              \
  template Var<T> layer_norm(const Var<T>&, const Var<T>&, const Var<T>&, T);                     \
  template Var<T> gelu(const Var<T>&);                                                            \
  template Var<T> concat_cols(const std::vector<Var<T>>&);                                        \
  template Var<T> slice_cols(const Var<T>&, std::size_t, std::size_t);                            \
  template Var<T> slice_rows(const Var<T>&, std::size_t, std::size_t);                            \
  template Var<T> repeat_row(const Var<T>&, std::size_t);                                         \
  template Var<T> mask_rows(const Var<T>&, const Var<T>&, std::span<const std::uint8_t>);         \
  template Var<T> embedding_lookup(const Var<T>&, std::span<const int>);                          \
  template Var<T> cross_entropy(const Var<T>&, std::span<const int>);                             \
  template Var<T> sum(const Var<T>&);

CMAD_INSTANTIATE_OPS(float)
CMAD_INSTANTIATE_OPS(double)

#undef CMAD_INSTANTIATE_OPS

}  // namespace cmad::ops
