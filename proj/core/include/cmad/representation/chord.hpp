// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <string>
#include <string_view>

namespace cmad {

/// A chord as {root, bass, bitmap}; bitmap bit j means "root + j semitones sounds".
struct ChordSymbol {
  int root = 0;
  int bass = 0;
  std::bitset<12> bitmap;
  bool no_chord = true;

  static ChordSymbol none() { return {}; }
  static ChordSymbol make(int root, int bass, std::bitset<12> bitmap) {
    return ChordSymbol{root, bass, bitmap, false};
  }

  /// Absolute pitch classes of the chord (bitmap rotated by the root).
  std::bitset<12> pitch_classes() const;

  friend bool operator==(const ChordSymbol& a, const ChordSymbol& b) {
    if (a.no_chord || b.no_chord) return a.no_chord == b.no_chord;
    return a.root == b.root && a.bass == b.bass && a.bitmap == b.bitmap;
  }
};

struct ChordQuality {
  std::string_view name;
  std::bitset<12> bitmap;
};

/// maj, min, 7, maj7, min7, dim, aug, sus2, sus4.
const std::array<ChordQuality, 9>& chord_qualities();

std::string_view pitch_class_name(int pc);

/// Parses ROOT[":"QUALITY]["/"BASS] or "N". Quality defaults to maj, bass to the root.
/// Throws ParseError naming the offending token.
ChordSymbol parse_chord_label(std::string_view text);

/// Inverse of parse_chord_label for chords whose bitmap is one of the known qualities.
std::string format_chord_label(const ChordSymbol& chord);

inline constexpr std::size_t kChordFrameSize = 37;
inline constexpr std::size_t kNoChordIndex = 36;
using ChordFrame = std::array<float, kChordFrameSize>;

/// [one-hot root (12); one-hot bass (12); bitmap (12); 0], or a one at index 36 for no chord.
ChordFrame encode_chord_frame(const ChordSymbol& chord);
ChordSymbol decode_chord_frame(const ChordFrame& frame);

}  // namespace cmad
