// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cmad {

/// Shape of the frozen decoder.
struct BaseConfig {
  std::size_t n_layers = 4;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t vocab_size = 64;
  std::size_t max_sequence = 128;  // T_max
  std::size_t ffn_multiplier = 4;
  bool use_cross_attention = true;
  std::size_t prompt_vocab = 6;

  std::size_t d_head() const noexcept { return n_heads ? d_model / n_heads : 0; }
  void validate() const;
};

struct ModelConfig {
  BaseConfig base;
  std::size_t adapted_layers = 2;  // L
  std::size_t k1 = 12;
  std::size_t k2 = 12;
  double mask_rate = 0.4;  // r
  double init_std = 0.02;

  void validate() const;
  /// Decoder layers N−L … N−1, ascending.
  std::vector<std::size_t> adapted_layer_indices() const;
  bool is_adapted(std::size_t layer) const noexcept {
    return layer + adapted_layers >= base.n_layers && layer < base.n_layers;
  }

  /// Flat key=value block: n_layers, d_model, n_heads, vocab_size, T_max, L, k1, k2, r, ...
  std::string to_text() const;
  static ModelConfig from_text(std::string_view text);
  void write(const std::filesystem::path& path) const;
  static ModelConfig read(const std::filesystem::path& path);
};

/// The four fixed text prompts and their word ids in the frozen prompt table.
inline constexpr std::array<std::string_view, 4> kPromptTexts = {"melodic music", "catchy song", "a song",
                                                                 "music tracks"};
inline constexpr std::array<std::string_view, 6> kPromptWords = {"melodic", "music", "catchy", "song", "a", "tracks"};
std::vector<int> prompt_word_ids(int prompt_id);

}  // namespace cmad
