// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/representation/annotations.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cmad/errors.hpp"

namespace cmad {
namespace {

std::string where(const std::string& source, std::size_t line) { return fmt::format("{}:{}", source, line); }

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

std::vector<ChordSymbol> frames_from_intervals(std::span<const ChordInterval> annotations, double frame_rate,
                                               std::size_t frames) {
  if (!(frame_rate > 0.0)) throw AnnotationError("frame rate must be positive");
  struct Parsed {
    double start, end;
    ChordSymbol chord;
  };
  std::vector<Parsed> parsed;
  parsed.reserve(annotations.size());
  for (const auto& a : annotations) {
    if (!(a.start_sec < a.end_sec)) {
      throw AnnotationError(fmt::format("interval [{}, {}) for '{}' is empty or reversed", a.start_sec, a.end_sec,
                                        a.label));
    }
    parsed.push_back({a.start_sec, a.end_sec, parse_chord_label(a.label)});
  }
  std::sort(parsed.begin(), parsed.end(), [](const Parsed& x, const Parsed& y) { return x.start < y.start; });
  for (std::size_t i = 1; i < parsed.size(); ++i) {
    if (parsed[i].start < parsed[i - 1].end) {
      throw AnnotationError(fmt::format("intervals [{}, {}) and [{}, {}) overlap", parsed[i - 1].start,
                                        parsed[i - 1].end, parsed[i].start, parsed[i].end));
    }
  }

  std::vector<ChordSymbol> out(frames, ChordSymbol::none());
  std::size_t k = 0;
  for (std::size_t i = 0; i < frames; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / frame_rate;
    while (k < parsed.size() && parsed[k].end <= t) ++k;
    if (k < parsed.size() && parsed[k].start <= t) out[i] = parsed[k].chord;
  }
  return out;
}

std::vector<ChordInterval> intervals_from_frames(std::span<const ChordSymbol> chords, double frame_rate) {
  std::vector<ChordInterval> out;
  std::size_t i = 0;
  while (i < chords.size()) {
    std::size_t j = i + 1;
    while (j < chords.size() && chords[j] == chords[i]) ++j;
    if (!chords[i].no_chord) {
      out.push_back({static_cast<double>(i) / frame_rate, static_cast<double>(j) / frame_rate,
                     format_chord_label(chords[i])});
    }
    i = j;
  }
  return out;
}

std::vector<ChordInterval> parse_lab(std::istream& in, const std::string& source) {
  std::vector<ChordInterval> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != 3) {
      throw ParseError(fmt::format("{}: expected 'start<TAB>end<TAB>label', got {} field(s)", where(source, lineno),
                                   fields.size()));
    }
    ChordInterval iv;
    if (!parse_double(fields[0], iv.start_sec) || !parse_double(fields[1], iv.end_sec)) {
      throw ParseError(fmt::format("{}: malformed time in '{}'", where(source, lineno), line));
    }
    iv.label = std::string(fields[2]);
    try {
      parse_chord_label(iv.label);
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("{}: {}", where(source, lineno), e.what()));
    }
    out.push_back(std::move(iv));
  }
  return out;
}

std::vector<ChordInterval> read_lab(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_lab(in, path.string());
}

void write_lab(const std::filesystem::path& path, std::span<const ChordInterval> intervals) {
  auto out = open_output(path);
  for (const auto& iv : intervals) out << fmt::format("{:.6f}\t{:.6f}\t{}\n", iv.start_sec, iv.end_sec, iv.label);
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

std::size_t frame_count(std::span<const ChordInterval> annotations, double frame_rate) {
  double end = 0.0;
  for (const auto& a : annotations) end = std::max(end, a.end_sec);
  return static_cast<std::size_t>(std::ceil(end * frame_rate - 1e-6));
}

std::vector<NoteEvent> parse_note_events(std::istream& in, const std::string& source) {
  std::vector<NoteEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (split_ws(line).empty()) continue;
    NoteEvent ev;
    try {
      auto j = nlohmann::json::parse(line);
      ev.onset_sec = j.at("onset_sec").get<double>();
      ev.offset_sec = j.at("offset_sec").get<double>();
      ev.pitch = j.at("pitch").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(fmt::format("{}: invalid note event: {}", where(source, lineno), e.what()));
    }
    if (ev.pitch < 0 || ev.pitch > 127) {
      throw ParseError(fmt::format("{}: pitch {} outside 0-127", where(source, lineno), ev.pitch));
    }
    if (!(ev.onset_sec < ev.offset_sec)) {
      throw ParseError(fmt::format("{}: onset must precede offset", where(source, lineno)));
    }
    out.push_back(ev);
  }
  return out;
}

std::vector<NoteEvent> read_note_events(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_note_events(in, path.string());
}

void write_note_events(const std::filesystem::path& path, std::span<const NoteEvent> notes) {
  auto out = open_output(path);
  for (const auto& n : notes) {
    out << fmt::format("{{\"onset_sec\": {:.6f}, \"offset_sec\": {:.6f}, \"pitch\": {}}}\n", n.onset_sec,
                       n.offset_sec, n.pitch);
  }
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

std::vector<PianoRollFrame> piano_roll_from_notes(std::span<const NoteEvent> notes, double frame_rate,
                                                  std::size_t frames) {
  std::vector<PianoRollFrame> roll(frames);
  for (const auto& n : notes) {
    if (n.pitch < 0 || n.pitch > 127) throw IndexError(fmt::format("note pitch {} outside 0-127", n.pitch));
    // Frames whose midpoint lies in [onset, offset).
    const double first = std::ceil(n.onset_sec * frame_rate - 0.5);
    for (auto i = static_cast<long long>(std::max(0.0, first)); i < static_cast<long long>(frames); ++i) {
      const double t = (static_cast<double>(i) + 0.5) / frame_rate;
      if (t >= n.offset_sec) break;
      if (t >= n.onset_sec) roll[static_cast<std::size_t>(i)].set(static_cast<std::size_t>(n.pitch));
    }
  }
  return roll;
}

std::vector<std::vector<int>> parse_token_lines(std::istream& in, const std::string& source) {
  std::vector<std::vector<int>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    std::vector<int> seq;
    seq.reserve(fields.size());
    for (auto f : fields) {
      int v = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || ptr != f.data() + f.size() || v < 0) {
        throw ParseError(fmt::format("{}: invalid token '{}'", where(source, lineno), f));
      }
      seq.push_back(v);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<std::vector<int>> read_token_lines(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_token_lines(in, path.string());
}

void write_token_lines(const std::filesystem::path& path, std::span<const std::vector<int>> sequences) {
  auto out = open_output(path);
  for (const auto& seq : sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i) out << (i ? " " : "") << seq[i];
    out << '\n';
  }
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

}  // namespace cmad
