// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/evaluation/dataset_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "cmad/config/key_value.hpp"
#include "cmad/errors.hpp"
#include "cmad/representation/annotations.hpp"

namespace cmad {
namespace {

void ensure_writable(const std::filesystem::path& path, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw IoError(fmt::format("'{}' already exists (use --force to overwrite)", path.string()));
  }
}

std::vector<NoteEvent> notes_from_targets(const std::vector<int>& targets, double frame_rate) {
  std::vector<NoteEvent> notes;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const int p = token_pitch(targets[t]);
    if (p < 0) continue;
    notes.push_back({static_cast<double>(t) / frame_rate, static_cast<double>(t + 1) / frame_rate, p});
  }
  return notes;
}

std::vector<int> single_line(const std::filesystem::path& path) {
  const auto lines = read_token_lines(path);
  if (lines.size() != 1) throw ParseError(fmt::format("{}: expected one token line, found {}", path.string(), lines.size()));
  return lines.front();
}

SyntheticExample read_example(const std::filesystem::path& dir, const std::string& id, const SyntheticSpec& spec) {
  SyntheticExample ex;
  ex.id = id;
  ex.targets = single_line(dir / (id + ".tok"));
  if (ex.targets.size() != spec.length) {
    throw ParseError(fmt::format("{}: {} tokens, expected {}", (dir / (id + ".tok")).string(), ex.targets.size(), spec.length));
  }
  const auto intervals = read_lab(dir / (id + ".lab"));
  ex.chords = frames_from_intervals(intervals, spec.frame_rate, spec.length);
  const auto notes = read_note_events(dir / (id + ".notes.jsonl"));
  const auto drums = single_line(dir / (id + ".drums.tok"));
  if (drums.size() != spec.length) {
    throw ParseError(fmt::format("{}: {} drum tokens, expected {}", (dir / (id + ".drums.tok")).string(), drums.size(),
                                 spec.length));
  }
  for (std::size_t f = 0; f < drums.size(); ++f) {
    if (drums[f] == kHitToken) ex.pulses.push_back(static_cast<int>(f));
  }
  ex.condition = ConditionSequence::make(ex.chords, piano_roll_from_notes(notes, spec.frame_rate, spec.length), drums,
                                         spec.frame_rate);
  return ex;
}

}  // namespace

std::string spec_to_text(const SyntheticSpec& s) {
  return fmt::format(
      "vocab_size={}\nchord_period={}\npulse_period={}\nlength={}\ntrain_count={}\nval_count={}\ntest_count={}\n"
      "frame_rate={}\n",
      s.vocab_size, s.chord_period, s.pulse_period, s.length, s.train_count, s.val_count, s.test_count, s.frame_rate);
}

SyntheticSpec spec_from_text(const std::string& text) {
  SyntheticSpec s;
  for (const auto& kv : parse_key_values(text, "spec.txt")) {
    if (kv.key == "vocab_size") s.vocab_size = parse_size(kv);
    else if (kv.key == "chord_period") s.chord_period = parse_size(kv);
    else if (kv.key == "pulse_period") s.pulse_period = parse_size(kv);
    else if (kv.key == "length") s.length = parse_size(kv);
    else if (kv.key == "train_count") s.train_count = parse_size(kv);
    else if (kv.key == "val_count") s.val_count = parse_size(kv);
    else if (kv.key == "test_count") s.test_count = parse_size(kv);
    else if (kv.key == "frame_rate") s.frame_rate = parse_real(kv);
    else throw ConfigError(fmt::format("spec.txt line {}: unknown key '{}'", kv.line, kv.key));
  }
  s.validate();
  return s;
}

void write_dataset(const SyntheticDataset& data, const std::filesystem::path& dir, bool force) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  const auto manifest = dir / "manifest.txt";
  ensure_writable(manifest, force);
  std::string listing;
  auto emit = [&](const char* split, const std::vector<SyntheticExample>& examples) {
    for (const auto& ex : examples) {
      listing += fmt::format("{} {}\n", split, ex.id);
      const auto tok = dir / (ex.id + ".tok");
      const auto lab = dir / (ex.id + ".lab");
      const auto notes = dir / (ex.id + ".notes.jsonl");
      const auto drums = dir / (ex.id + ".drums.tok");
      for (const auto& p : {tok, lab, notes, drums}) ensure_writable(p, force);
      write_token_lines(tok, std::vector<std::vector<int>>{ex.targets});
      write_lab(lab, intervals_from_frames(ex.chords, data.spec.frame_rate));
      write_note_events(notes, notes_from_targets(ex.targets, data.spec.frame_rate));
      write_token_lines(drums, std::vector<std::vector<int>>{ex.condition.acoustic});
    }
  };
  emit("train", data.train);
  emit("val", data.val);
  emit("test", data.test);
  const auto spec = dir / "spec.txt";
  ensure_writable(spec, force);
  for (const auto& [path, text] : {std::pair{spec, spec_to_text(data.spec)}, std::pair{manifest, listing}}) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("failed while writing '" + path.string() + "'");
  }
}

SyntheticDataset read_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError(fmt::format("dataset directory '{}' not found", dir.string()));
  SyntheticDataset data;
  data.spec = spec_from_text(read_text_file((dir / "spec.txt").string()));
  std::istringstream manifest(read_text_file((dir / "manifest.txt").string()));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string split, id, extra;
    if (!(ls >> split >> id) || (ls >> extra)) {
      throw ParseError(fmt::format("{}:{}: expected '<split> <id>'", (dir / "manifest.txt").string(), lineno));
    }
    auto ex = read_example(dir, id, data.spec);
    if (split == "train") data.train.push_back(std::move(ex));
    else if (split == "val") data.val.push_back(std::move(ex));
    else if (split == "test") data.test.push_back(std::move(ex));
    else throw ParseError(fmt::format("{}:{}: unknown split '{}'", (dir / "manifest.txt").string(), lineno, split));
  }
  return data;
}

ConditionSequence load_condition(const std::filesystem::path& chords, const std::filesystem::path& midi,
                                 const std::filesystem::path& drums, double frame_rate) {
  const auto intervals = read_lab(chords);
  const std::size_t n = frame_count(intervals, frame_rate);
  if (n == 0) throw AnnotationError(fmt::format("{}: no chord intervals", chords.string()));
  auto frames = frames_from_intervals(intervals, frame_rate, n);
  std::vector<PianoRollFrame> roll(n);
  if (!midi.empty()) roll = piano_roll_from_notes(read_note_events(midi), frame_rate, n);
  std::vector<int> acoustic(n, kRestToken);
  if (!drums.empty()) {
    acoustic = single_line(drums);
    if (acoustic.size() != n) {
      throw AnnotationError(fmt::format("{}: {} drum tokens for {} chord frames", drums.string(), acoustic.size(), n));
    }
  }
  auto cond = ConditionSequence::make(std::move(frames), std::move(roll), std::move(acoustic), frame_rate);
  return with_channel_masks(std::move(cond), midi.empty(), drums.empty());
}

}  // namespace cmad
