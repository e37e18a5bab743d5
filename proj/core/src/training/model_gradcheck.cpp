// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/training/model_gradcheck.hpp"

#include <random>

#include "cmad/errors.hpp"
#include "cmad/model/adapted_model.hpp"

namespace cmad {

ModelConfig gradcheck_config() {
  ModelConfig c;
  c.base.n_layers = 2;
  c.base.d_model = 16;
  c.base.n_heads = 2;
  c.base.vocab_size = 8;
  c.base.max_sequence = 6;
  c.base.ffn_multiplier = 2;
  c.adapted_layers = 2;
  return c;
}

GradCheckResult check_model_gradients(const ModelConfig& config, const ModelGradCheckOptions& options) {
  ModelConfig cfg = config;
  cfg.init_std = options.init_scale;
  cfg.validate();
  const std::size_t n = options.frames;
  if (n == 0 || n > cfg.base.max_sequence) throw ConfigError("gradcheck frames must be in [1, T_max]");

  auto model = AdaptedModel<double>::build(cfg, options.seed);
  for (std::size_t s = 0; s < model.adapted_count(); ++s) model.gate(s).value[0] = options.gate_value;

  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  const int vocab = static_cast<int>(cfg.base.vocab_size);
  std::uniform_int_distribution<int> token(0, vocab - 1);
  std::uniform_int_distribution<int> pc(0, 11);
  std::uniform_int_distribution<std::size_t> quality(0, chord_qualities().size() - 1);
  std::uniform_int_distribution<std::size_t> pitch(0, kPianoRollPitches - 1);
  std::vector<int> inputs(n), targets(n), acoustic(n);
  std::vector<ChordSymbol> chords(n);
  std::vector<PianoRollFrame> roll(n);
  for (std::size_t t = 0; t < n; ++t) {
    inputs[t] = token(rng);
    targets[t] = token(rng);
    acoustic[t] = token(rng);
    chords[t] = t % 3 == 2 ? ChordSymbol::none() : ChordSymbol::make(pc(rng), pc(rng), chord_qualities()[quality(rng)].bitmap);
    for (int k = 0; k < 3; ++k) roll[t].set(pitch(rng));
  }
  auto cond = ConditionSequence::make(chords, roll, acoustic);
  // Alternate masks so each channel has masked and unmasked frames.
  for (std::size_t t = 0; t < n; ++t) {
    cond.midi_masked[t] = t % 2 == 0 ? 1 : 0;
    cond.acoustic_masked[t] = t % 3 == 0 ? 1 : 0;
  }
  const int prompt = 1;

  auto loss = [&](Tape<double>& tape) {
    auto logits = model.forward(tape, inputs, cond, prompt);
    return ops::cross_entropy(logits, std::span<const int>(targets));
  };
  return finite_diff_check(loss, model.parameters(), options.epsilon);
}

}  // namespace cmad
