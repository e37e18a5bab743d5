// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/evaluation/synthetic.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "cmad/errors.hpp"

namespace cmad {

void SyntheticSpec::validate() const {
  if (vocab_size <= static_cast<std::size_t>(kStartToken)) {
    throw ConfigError(fmt::format("vocab_size must exceed {}", kStartToken));
  }
  if (chord_period == 0 || pulse_period == 0) throw ConfigError("chord_period and pulse_period must be positive");
  if (length == 0) throw ConfigError("length must be positive");
  if (train_count == 0) throw ConfigError("train_count must be positive");
  if (!(frame_rate > 0.0)) throw ConfigError("frame_rate must be positive");
}

std::vector<int> SyntheticExample::inputs() const {
  std::vector<int> in;
  in.reserve(targets.size());
  in.push_back(kStartToken);
  in.insert(in.end(), targets.begin(), targets.end() - 1);
  return in;
}

ConditionSequence condition_from_targets(const std::vector<int>& targets, const std::vector<ChordSymbol>& chords,
                                         const std::vector<int>& pulses, std::size_t length, double frame_rate) {
  std::vector<PianoRollFrame> roll(length);
  for (std::size_t t = 0; t < length && t < targets.size(); ++t) {
    const int p = token_pitch(targets[t]);
    if (p >= 0) roll[t].set(static_cast<std::size_t>(p));
  }
  std::vector<int> drums(length, kRestToken);
  for (int f : pulses) {
    if (f >= 0 && static_cast<std::size_t>(f) < length) drums[static_cast<std::size_t>(f)] = kHitToken;
  }
  return ConditionSequence::make(chords, std::move(roll), std::move(drums), frame_rate);
}

SyntheticExample synthesize_example(const SyntheticSpec& spec, std::mt19937_64& rng, std::string id) {
  spec.validate();
  const std::size_t n = spec.length;
  const auto& qualities = chord_qualities();
  SyntheticExample ex;
  ex.id = std::move(id);
  ex.chords.resize(n);
  ex.targets.assign(n, kRestToken);

  const auto phase = std::uniform_int_distribution<std::size_t>(0, spec.pulse_period - 1)(rng);
  std::vector<bool> hit(n, false);
  for (std::size_t f = phase; f < n; f += spec.pulse_period) {
    hit[f] = true;
    ex.pulses.push_back(static_cast<int>(f));
  }

  std::uniform_int_distribution<int> root_dist(0, 11);
  std::uniform_int_distribution<std::size_t> quality_dist(0, qualities.size() - 1);
  std::uniform_int_distribution<int> octave_dist(0, kPitchedTokens / 12 - 1);
  for (std::size_t start = 0; start < n; start += spec.chord_period) {
    const std::size_t end = std::min(n, start + spec.chord_period);
    const int root = root_dist(rng);
    const auto chord = ChordSymbol::make(root, root, qualities[quality_dist(rng)].bitmap);
    std::fill(ex.chords.begin() + static_cast<std::ptrdiff_t>(start),
              ex.chords.begin() + static_cast<std::ptrdiff_t>(end), chord);

    std::vector<int> tones;
    const auto pcs = chord.pitch_classes();
    for (int pc = 0; pc < 12; ++pc) {
      if (pcs.test(static_cast<std::size_t>(pc))) tones.push_back(pc);
    }
    std::vector<std::size_t> slots;
    for (std::size_t f = start; f < end; ++f) {
      if (!hit[f]) slots.push_back(f);
    }
    // Cover every tone once when the window has room, then draw the rest uniformly.
    std::vector<int> classes;
    if (slots.size() >= tones.size()) classes = tones;
    std::uniform_int_distribution<std::size_t> tone_dist(0, tones.size() - 1);
    while (classes.size() < slots.size()) classes.push_back(tones[tone_dist(rng)]);
    std::shuffle(classes.begin(), classes.end(), rng);
    for (std::size_t s = 0; s < slots.size(); ++s) ex.targets[slots[s]] = classes[s] + 12 * octave_dist(rng);
  }
  for (std::size_t f = 0; f < n; ++f) {
    if (hit[f]) ex.targets[f] = kHitToken;
  }
  ex.condition = condition_from_targets(ex.targets, ex.chords, ex.pulses, n, spec.frame_rate);
  return ex;
}

SyntheticDataset synthesize_dataset(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  SyntheticDataset ds;
  ds.spec = spec;
  std::mt19937_64 rng(seed);
  std::size_t next = 0;
  auto fill = [&](std::vector<SyntheticExample>& split, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) split.push_back(synthesize_example(spec, rng, fmt::format("ex{:05d}", next++)));
  };
  fill(ds.train, spec.train_count);
  fill(ds.val, spec.val_count);
  fill(ds.test, spec.test_count);
  return ds;
}

}  // namespace cmad
