// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "cmad/evaluation/synthetic.hpp"

namespace cmad {

// On-disk layout of a dataset directory:
//   manifest.txt       "<split> <id>" per line, split in {train, val, test}
//   spec.txt           SyntheticSpec as key=value
//   <id>.tok           target tokens (one line)
//   <id>.lab           chord intervals
//   <id>.notes.jsonl   note events derived from the targets
//   <id>.drums.tok     acoustic drum tokens (one line)

std::string spec_to_text(const SyntheticSpec& spec);
SyntheticSpec spec_from_text(const std::string& text);

/// Fails with IoError when a file would be overwritten and `force` is false.
void write_dataset(const SyntheticDataset& data, const std::filesystem::path& dir, bool force = false);
/// Throws IoError for a missing directory or file and the parser errors for malformed content.
SyntheticDataset read_dataset(const std::filesystem::path& dir);

/// Loads a condition sequence from user files. Missing MIDI or drum files leave the channel
/// masked; the chord file fixes the length.
ConditionSequence load_condition(const std::filesystem::path& chords, const std::filesystem::path& midi,
                                 const std::filesystem::path& drums, double frame_rate = kDefaultFrameRate);

}  // namespace cmad
