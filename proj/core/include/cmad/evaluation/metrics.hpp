// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "cmad/representation/chord.hpp"

namespace cmad {

enum class RecallMode { root, full };

/// Frame-weighted chord recall. Frames are grouped into aligned windows of `window` frames and
/// the pitch classes of the generated tokens in a window form its set. A frame scores when the
/// set contains its reference root (root mode) or equals the reference pitch-class set (full
/// mode). Frames whose reference is no-chord are not scored; with no scored frame the result
/// is 1. Throws AlignmentError on a length mismatch.
double chord_recall(std::span<const int> generated, std::span<const ChordSymbol> reference, RecallMode mode,
                    std::size_t window);

/// Expected root-mode recall of tokens drawn uniformly from the vocabulary.
double chance_root_recall(std::span<const ChordSymbol> reference, std::size_t window, std::size_t vocab_size);

/// Monte-Carlo estimate of the same expectation (and of full mode, which has no closed form here).
double monte_carlo_recall(std::span<const ChordSymbol> reference, RecallMode mode, std::size_t window,
                          std::size_t vocab_size, std::size_t trials, std::mt19937_64& rng);

/// Frames whose token is the drum hit.
std::vector<int> hit_frames(std::span<const int> tokens);

struct BeatScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t matched = 0;
};

/// One-to-one matching of detections to references within ±tolerance frames, scanning both
/// sorted lists once. Two empty lists score 1; exactly one empty list scores 0.
BeatScore beat_f_measure(std::span<const int> detections, std::span<const int> references, int tolerance = 3);

}  // namespace cmad
