// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bitset>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "cmad/representation/chord.hpp"

namespace cmad {

inline constexpr double kDefaultFrameRate = 50.0;
inline constexpr std::size_t kPianoRollPitches = 128;
using PianoRollFrame = std::bitset<kPianoRollPitches>;

struct ChordInterval {
  double start_sec = 0.0;
  double end_sec = 0.0;
  std::string label;
};

/// Frame i takes the label covering time (i + 0.5) / frame_rate; uncovered frames get no chord.
/// Throws AnnotationError for empty or overlapping intervals and ParseError for bad labels.
std::vector<ChordSymbol> frames_from_intervals(std::span<const ChordInterval> annotations, double frame_rate,
                                               std::size_t frames);

/// Collapses runs of identical chords into intervals; no-chord runs are omitted.
std::vector<ChordInterval> intervals_from_frames(std::span<const ChordSymbol> chords, double frame_rate);

/// `.lab` lines: start<TAB>end<TAB>label. Errors carry the source name and line number.
std::vector<ChordInterval> parse_lab(std::istream& in, const std::string& source = "<stream>");
std::vector<ChordInterval> read_lab(const std::filesystem::path& path);
void write_lab(const std::filesystem::path& path, std::span<const ChordInterval> intervals);

/// Number of frames spanned by the annotations: ceil(max end × frame_rate), rounded to absorb
/// decimal noise.
std::size_t frame_count(std::span<const ChordInterval> annotations, double frame_rate);

struct NoteEvent {
  double onset_sec = 0.0;
  double offset_sec = 0.0;
  int pitch = 0;
};

/// One JSON object per line: {"onset_sec": .., "offset_sec": .., "pitch": ..}.
std::vector<NoteEvent> parse_note_events(std::istream& in, const std::string& source = "<stream>");
std::vector<NoteEvent> read_note_events(const std::filesystem::path& path);
void write_note_events(const std::filesystem::path& path, std::span<const NoteEvent> notes);

/// Pitch j sounds in frame i iff some note with that pitch covers the frame midpoint.
std::vector<PianoRollFrame> piano_roll_from_notes(std::span<const NoteEvent> notes, double frame_rate,
                                                  std::size_t frames);

/// One sequence per line, space-separated non-negative integers.
std::vector<std::vector<int>> parse_token_lines(std::istream& in, const std::string& source = "<stream>");
std::vector<std::vector<int>> read_token_lines(const std::filesystem::path& path);
void write_token_lines(const std::filesystem::path& path, std::span<const std::vector<int>> sequences);

}  // namespace cmad
