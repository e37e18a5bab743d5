// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cmad/representation/condition.hpp"

namespace cmad {

// Token layout of the synthetic task. Tokens 0..47 are pitched (four octaves of each pitch
// class), followed by the drum hit, the rest marker and the start token; the remainder of the
// vocabulary is unused.
inline constexpr int kPitchedTokens = 48;
inline constexpr int kHitToken = 48;
inline constexpr int kRestToken = 49;
inline constexpr int kStartToken = 50;
inline constexpr int kLowestPitch = 48;  // MIDI pitch of token 0

/// Pitch class of a pitched token, or -1.
inline int token_pitch_class(int token) noexcept { return token >= 0 && token < kPitchedTokens ? token % 12 : -1; }
/// MIDI pitch of a pitched token, or -1.
inline int token_pitch(int token) noexcept { return token >= 0 && token < kPitchedTokens ? kLowestPitch + token : -1; }

struct SyntheticSpec {
  std::size_t vocab_size = 64;
  std::size_t chord_period = 16;  // frames per chord
  std::size_t pulse_period = 16;  // frames between drum hits
  std::size_t length = 128;       // frames per example
  std::size_t train_count = 200;
  std::size_t val_count = 20;
  std::size_t test_count = 16;
  double frame_rate = 50.0;

  void validate() const;
};

struct SyntheticExample {
  std::string id;
  std::vector<int> targets;
  std::vector<ChordSymbol> chords;
  std::vector<int> pulses;  // frames carrying a drum hit
  ConditionSequence condition;

  /// Decoder input: the start token followed by targets shifted right by one.
  std::vector<int> inputs() const;
};

struct SyntheticDataset {
  SyntheticSpec spec;
  std::vector<SyntheticExample> train;
  std::vector<SyntheticExample> val;
  std::vector<SyntheticExample> test;
};

/// One example: a chord schedule changing every period (uniform over 9 qualities × 12 roots,
/// bass on the root), a drum pulse with random phase, and targets drawn from the active chord.
/// Every chord tone sounds at least once in each full chord window.
SyntheticExample synthesize_example(const SyntheticSpec& spec, std::mt19937_64& rng, std::string id);

/// Rebuilds the condition channels from targets, chords and pulses.
ConditionSequence condition_from_targets(const std::vector<int>& targets, const std::vector<ChordSymbol>& chords,
                                         const std::vector<int>& pulses, std::size_t length, double frame_rate);

SyntheticDataset synthesize_dataset(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace cmad
