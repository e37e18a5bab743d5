// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/evaluation/metrics.hpp"

#include <algorithm>
#include <bitset>
#include <cmath>

#include <fmt/format.h>

#include "cmad/errors.hpp"
#include "cmad/evaluation/synthetic.hpp"

namespace cmad {

double chord_recall(std::span<const int> generated, std::span<const ChordSymbol> reference, RecallMode mode,
                    std::size_t window) {
  if (generated.size() != reference.size()) {
    throw AlignmentError(fmt::format("{} generated frames for {} reference frames", generated.size(),
                                     reference.size()));
  }
  if (window == 0) throw ConfigError("recall window must be positive");
  std::size_t scored = 0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < generated.size(); start += window) {
    const std::size_t end = std::min(generated.size(), start + window);
    std::bitset<12> set;
    for (std::size_t f = start; f < end; ++f) {
      const int pc = token_pitch_class(generated[f]);
      if (pc >= 0) set.set(static_cast<std::size_t>(pc));
    }
    for (std::size_t f = start; f < end; ++f) {
      const auto& ref = reference[f];
      if (ref.no_chord) continue;
      ++scored;
      const bool ok = mode == RecallMode::root ? set.test(static_cast<std::size_t>(ref.root))
                                               : set == ref.pitch_classes();
      if (ok) ++correct;
    }
  }
  return scored ? static_cast<double>(correct) / static_cast<double>(scored) : 1.0;
}

double chance_root_recall(std::span<const ChordSymbol> reference, std::size_t window, std::size_t vocab_size) {
  if (window == 0 || vocab_size == 0) throw ConfigError("window and vocab_size must be positive");
  std::size_t scored = 0;
  double expected = 0.0;
  for (std::size_t start = 0; start < reference.size(); start += window) {
    const std::size_t end = std::min(reference.size(), start + window);
    const double w = static_cast<double>(end - start);
    for (std::size_t f = start; f < end; ++f) {
      const auto& ref = reference[f];
      if (ref.no_chord) continue;
      ++scored;
      std::size_t hits = 0;
      for (int t = 0; t < static_cast<int>(vocab_size); ++t) {
        if (token_pitch_class(t) == ref.root) ++hits;
      }
      const double miss = 1.0 - static_cast<double>(hits) / static_cast<double>(vocab_size);
      expected += 1.0 - std::pow(miss, w);
    }
  }
  return scored ? expected / static_cast<double>(scored) : 1.0;
}

double monte_carlo_recall(std::span<const ChordSymbol> reference, RecallMode mode, std::size_t window,
                          std::size_t vocab_size, std::size_t trials, std::mt19937_64& rng) {
  if (trials == 0) throw ConfigError("trials must be positive");
  std::uniform_int_distribution<int> token(0, static_cast<int>(vocab_size) - 1);
  std::vector<int> draw(reference.size());
  double total = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    for (auto& t : draw) t = token(rng);
    total += chord_recall(draw, reference, mode, window);
  }
  return total / static_cast<double>(trials);
}

std::vector<int> hit_frames(std::span<const int> tokens) {
  std::vector<int> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == kHitToken) out.push_back(static_cast<int>(i));
  }
  return out;
}

BeatScore beat_f_measure(std::span<const int> detections, std::span<const int> references, int tolerance) {
  if (tolerance < 0) throw ConfigError("beat tolerance must be non-negative");
  BeatScore s;
  if (detections.empty() && references.empty()) {
    s.precision = s.recall = s.f1 = 1.0;
    return s;
  }
  if (detections.empty() || references.empty()) return s;
  std::vector<int> det(detections.begin(), detections.end());
  std::vector<int> ref(references.begin(), references.end());
  std::sort(det.begin(), det.end());
  std::sort(ref.begin(), ref.end());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < det.size() && j < ref.size()) {
    if (std::abs(det[i] - ref[j]) <= tolerance) {
      ++s.matched;
      ++i;
      ++j;
    } else if (det[i] < ref[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  s.precision = static_cast<double>(s.matched) / static_cast<double>(det.size());
  s.recall = static_cast<double>(s.matched) / static_cast<double>(ref.size());
  s.f1 = s.matched ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

}  // namespace cmad
