// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/model/config.hpp"

#include <fstream>

#include <fmt/format.h>

#include "cmad/config/key_value.hpp"
#include "cmad/errors.hpp"

namespace cmad {

void BaseConfig::validate() const {
  if (n_layers == 0) throw ConfigError("n_layers must be positive");
  if (d_model == 0 || n_heads == 0) throw ConfigError("d_model and n_heads must be positive");
  if (d_model % n_heads != 0) {
    throw ConfigError(fmt::format("d_model {} is not divisible by n_heads {}", d_model, n_heads));
  }
  if (vocab_size < 2) throw ConfigError("vocab_size must be at least 2");
  if (max_sequence == 0) throw ConfigError("T_max must be positive");
  if (ffn_multiplier == 0) throw ConfigError("ffn_multiplier must be positive");
  if (use_cross_attention && prompt_vocab < kPromptWords.size()) {
    throw ConfigError(fmt::format("prompt_vocab must be at least {}", kPromptWords.size()));
  }
}

void ModelConfig::validate() const {
  base.validate();
  if (adapted_layers > base.n_layers) {
    throw ConfigError(fmt::format("L = {} exceeds the number of decoder layers N = {}", adapted_layers, base.n_layers));
  }
  if (k1 == 0 || k2 == 0) throw ConfigError("k1 and k2 must be positive");
  if (!(mask_rate >= 0.0 && mask_rate <= 1.0)) throw ConfigError(fmt::format("r = {} outside [0, 1]", mask_rate));
  if (!(init_std > 0.0)) throw ConfigError("init_std must be positive");
}

std::vector<std::size_t> ModelConfig::adapted_layer_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = base.n_layers - adapted_layers; i < base.n_layers; ++i) out.push_back(i);
  return out;
}

std::string ModelConfig::to_text() const {
  return fmt::format(
      "n_layers={}\nd_model={}\nn_heads={}\nvocab_size={}\nT_max={}\nL={}\nk1={}\nk2={}\nr={}\n"
      "ffn_multiplier={}\nuse_cross_attention={}\nprompt_vocab={}\ninit_std={}\n",
      base.n_layers, base.d_model, base.n_heads, base.vocab_size, base.max_sequence, adapted_layers, k1, k2,
      mask_rate, base.ffn_multiplier, base.use_cross_attention ? "true" : "false", base.prompt_vocab, init_std);
}

ModelConfig ModelConfig::from_text(std::string_view text) {
  ModelConfig c;
  for (const auto& kv : parse_key_values(text, "model config")) {
    if (kv.key == "n_layers") c.base.n_layers = parse_size(kv);
    else if (kv.key == "d_model") c.base.d_model = parse_size(kv);
    else if (kv.key == "n_heads") c.base.n_heads = parse_size(kv);
    else if (kv.key == "vocab_size") c.base.vocab_size = parse_size(kv);
    else if (kv.key == "T_max") c.base.max_sequence = parse_size(kv);
    else if (kv.key == "L") c.adapted_layers = parse_size(kv);
    else if (kv.key == "k1") c.k1 = parse_size(kv);
    else if (kv.key == "k2") c.k2 = parse_size(kv);
    else if (kv.key == "r") c.mask_rate = parse_real(kv);
    else if (kv.key == "ffn_multiplier") c.base.ffn_multiplier = parse_size(kv);
    else if (kv.key == "use_cross_attention") c.base.use_cross_attention = parse_bool(kv);
    else if (kv.key == "prompt_vocab") c.base.prompt_vocab = parse_size(kv);
    else if (kv.key == "init_std") c.init_std = parse_real(kv);
    else throw ConfigError(fmt::format("line {}: unknown model config key '{}'", kv.line, kv.key));
  }
  c.validate();
  return c;
}

void ModelConfig::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << to_text();
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

ModelConfig ModelConfig::read(const std::filesystem::path& path) {
  return from_text(read_text_file(path.string()));
}

std::vector<int> prompt_word_ids(int prompt_id) {
  if (prompt_id < 0 || static_cast<std::size_t>(prompt_id) >= kPromptTexts.size()) {
    throw IndexError(fmt::format("prompt id {} outside [0, {})", prompt_id, kPromptTexts.size()));
  }
  std::vector<int> ids;
  std::string_view text = kPromptTexts[static_cast<std::size_t>(prompt_id)];
  while (!text.empty()) {
    auto sp = text.find(' ');
    auto word = text.substr(0, sp);
    for (std::size_t w = 0; w < kPromptWords.size(); ++w) {
      if (kPromptWords[w] == word) ids.push_back(static_cast<int>(w));
    }
    text = sp == std::string_view::npos ? std::string_view{} : text.substr(sp + 1);
  }
  return ids;
}

}  // namespace cmad
