// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/representation/chord.hpp"

#include <initializer_list>
#include <optional>

#include "cmad/errors.hpp"

namespace cmad {
namespace {

std::bitset<12> bits(std::initializer_list<int> offsets) {
  std::bitset<12> b;
  for (int o : offsets) b.set(static_cast<std::size_t>(o));
  return b;
}

constexpr std::array<std::string_view, 12> kNames = {"C",  "C#", "D",  "D#", "E",  "F",
                                                      "F#", "G",  "G#", "A",  "A#", "B"};

std::optional<int> parse_note(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int pc;
  switch (s[0]) {
    case 'C': pc = 0; break;
    case 'D': pc = 2; break;
    case 'E': pc = 4; break;
    case 'F': pc = 5; break;
    case 'G': pc = 7; break;
    case 'A': pc = 9; break;
    case 'B': pc = 11; break;
    default: return std::nullopt;
  }
  if (s.size() == 1) return pc;
  if (s.size() == 2 && s[1] == '#') return (pc + 1) % 12;
  if (s.size() == 2 && s[1] == 'b') return (pc + 11) % 12;
  return std::nullopt;
}

}  // namespace

std::bitset<12> ChordSymbol::pitch_classes() const {
  std::bitset<12> out;
  if (no_chord) return out;
  for (std::size_t j = 0; j < 12; ++j) {
    if (bitmap[j]) out.set((static_cast<std::size_t>(root) + j) % 12);
  }
  return out;
}

const std::array<ChordQuality, 9>& chord_qualities() {
  static const std::array<ChordQuality, 9> table = {{
      {"maj", bits({0, 4, 7})},
      {"min", bits({0, 3, 7})},
      {"7", bits({0, 4, 7, 10})},
      {"maj7", bits({0, 4, 7, 11})},
      {"min7", bits({0, 3, 7, 10})},
      {"dim", bits({0, 3, 6})},
      {"aug", bits({0, 4, 8})},
      {"sus2", bits({0, 2, 7})},
      {"sus4", bits({0, 5, 7})},
  }};
  return table;
}

std::string_view pitch_class_name(int pc) {
  if (pc < 0 || pc > 11) throw IndexError("pitch class " + std::to_string(pc) + " out of range");
  return kNames[static_cast<std::size_t>(pc)];
}

ChordSymbol parse_chord_label(std::string_view text) {
  if (text == "N") return ChordSymbol::none();
  if (text.empty()) throw ParseError("empty chord label");

  std::string_view root_part = text, quality_part = "maj", bass_part;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    bass_part = text.substr(slash + 1);
    root_part = text.substr(0, slash);
    if (bass_part.empty()) throw ParseError("chord label '" + std::string(text) + "': missing bass after '/'");
  }
  if (auto colon = root_part.find(':'); colon != std::string_view::npos) {
    quality_part = root_part.substr(colon + 1);
    root_part = root_part.substr(0, colon);
    if (quality_part.empty()) throw ParseError("chord label '" + std::string(text) + "': missing quality after ':'");
  }

  auto root = parse_note(root_part);
  if (!root) throw ParseError("unknown chord root '" + std::string(root_part) + "' in '" + std::string(text) + "'");

  const ChordQuality* quality = nullptr;
  for (const auto& q : chord_qualities()) {
    if (q.name == quality_part) quality = &q;
  }
  if (!quality) {
    throw ParseError("unknown chord quality '" + std::string(quality_part) + "' in '" + std::string(text) + "'");
  }

  int bass = *root;
  if (!bass_part.empty()) {
    auto b = parse_note(bass_part);
    if (!b) throw ParseError("unknown bass note '" + std::string(bass_part) + "' in '" + std::string(text) + "'");
    bass = *b;
  }
  return ChordSymbol::make(*root, bass, quality->bitmap);
}

std::string format_chord_label(const ChordSymbol& chord) {
  if (chord.no_chord) return "N";
  for (const auto& q : chord_qualities()) {
    if (q.bitmap != chord.bitmap) continue;
    std::string out(pitch_class_name(chord.root));
    out += ':';
    out += q.name;
    if (chord.bass != chord.root) {
      out += '/';
      out += pitch_class_name(chord.bass);
    }
    return out;
  }
  throw ParseError("chord bitmap " + chord.bitmap.to_string() + " has no quality name");
}

ChordFrame encode_chord_frame(const ChordSymbol& chord) {
  ChordFrame f{};
  if (chord.no_chord) {
    f[kNoChordIndex] = 1.0f;
    return f;
  }
  f[static_cast<std::size_t>(chord.root)] = 1.0f;
  f[12 + static_cast<std::size_t>(chord.bass)] = 1.0f;
  for (std::size_t j = 0; j < 12; ++j) {
    if (chord.bitmap[j]) f[24 + j] = 1.0f;
  }
  return f;
}

ChordSymbol decode_chord_frame(const ChordFrame& frame) {
  if (frame[kNoChordIndex] != 0.0f) return ChordSymbol::none();
  ChordSymbol c;
  c.no_chord = false;
  for (std::size_t j = 0; j < 12; ++j) {
    if (frame[j] != 0.0f) c.root = static_cast<int>(j);
    if (frame[12 + j] != 0.0f) c.bass = static_cast<int>(j);
    c.bitmap[j] = frame[24 + j] != 0.0f;
  }
  return c;
}

}  // namespace cmad
