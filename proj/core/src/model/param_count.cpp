// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/model/param_count.hpp"

#include "cmad/representation/chord.hpp"

namespace cmad {

ParameterCount count_parameters(const ModelConfig& config, EncoderMode mode) {
  config.validate();
  const auto& b = config.base;
  const std::size_t d = b.d_model;
  const std::size_t attn = 2 * d + 4 * d * d;  // pre-norm plus q, k, v, o
  std::size_t block = attn + 2 * d + 2 * d * d * b.ffn_multiplier;
  if (b.use_cross_attention) block += attn;
  std::size_t frozen = b.vocab_size * d + b.n_layers * block + 2 * d + d * b.vocab_size;
  if (b.use_cross_attention) frozen += b.prompt_vocab * d;
  if (mode == EncoderMode::copy) frozen += config.adapted_layers * attn;

  const std::size_t joint = kChordFrameSize + config.k1 + config.k2;
  std::size_t trainable = 128 * config.k1 + d * config.k2 + config.k1 + config.k2 + b.max_sequence * joint;
  if (config.adapted_layers > 0) {
    trainable += b.max_sequence * d;                                   // encoder input sequence
    trainable += config.adapted_layers;                                // gates
    trainable += config.adapted_layers * b.n_heads * joint * b.d_head();  // fusion matrices
  }
  return {frozen + trainable, trainable};
}

ModelConfig full_scale_config(std::size_t adapted_layers) {
  ModelConfig c;
  c.base.n_layers = 48;
  c.base.d_model = 2048;
  c.base.n_heads = 32;
  c.base.vocab_size = 2048;
  c.base.max_sequence = 1000;
  c.base.ffn_multiplier = 4;
  c.base.use_cross_attention = true;
  c.base.prompt_vocab = 6;
  c.adapted_layers = adapted_layers;
  c.k1 = 12;
  c.k2 = 12;
  return c;
}

}  // namespace cmad
