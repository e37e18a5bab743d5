// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cmad/model/adapted_model.hpp"

namespace cmad {

struct SamplingOptions {
  double temperature = 1.0;
  std::size_t top_k = 0;  // 0 keeps the whole vocabulary
  bool greedy = false;
  int start_token = 50;
};

/// Token-at-a-time evaluation of an AdaptedModel with cached keys and values.
///
/// Produces the same logits as AdaptedModel::forward row by row, without a tape. The encoder
/// and prompt projections are computed once up front.
template <typename T>
class IncrementalDecoder {
 public:
  IncrementalDecoder(const AdaptedModel<T>& model, const ConditionSequence& cond, int prompt_id,
                     bool use_adaptor = true);

  /// Feeds the token at the current position and returns next-token logits (length V).
  std::vector<T> step(int token);
  std::size_t position() const noexcept { return pos_; }
  std::size_t capacity() const noexcept { return frames_; }

 private:
  struct LayerCache {
    std::vector<T> k;  // pos × d
    std::vector<T> v;
    std::vector<T> xk;  // prompt words × d
    std::vector<T> xv;
  };

  void attend(const T* q, const T* k, const T* v, std::size_t rows, T* out) const;

  const AdaptedModel<T>* model_;
  std::size_t frames_;
  std::size_t pos_ = 0;
  bool adapt_;
  std::size_t prompt_rows_ = 0;
  std::vector<LayerCache> cache_;
  std::vector<Tensor<T>> enc_q_, enc_k_, enc_v_;
};

/// Picks the next token from a logit row.
int sample_token(std::span<const float> logits, const SamplingOptions& options, std::mt19937_64& rng);

/// Autoregressive generation of cond.length() tokens starting from options.start_token.
std::vector<int> generate(const AdaptedModel<float>& model, const ConditionSequence& cond, int prompt_id,
                          const SamplingOptions& options, std::mt19937_64& rng, bool use_adaptor = true);

extern template class IncrementalDecoder<float>;
extern template class IncrementalDecoder<double>;

}  // namespace cmad
