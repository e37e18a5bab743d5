// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cmad/evaluation/synthetic.hpp"
#include "cmad/model/generation.hpp"

namespace cmad {

/// Which condition channels are given to the model; withheld channels use their mask embedding.
struct EvalGroup {
  std::string name;
  bool chords = true;
  bool midi = false;
  bool drums = false;
};

/// chord-only, midi-only, drums-only and full. Chords are present in all four.
std::vector<EvalGroup> standard_groups();
/// Chords replaced by no-chord and both channels masked.
EvalGroup baseline_group();
/// Comma-separated group names; "all" selects the standard four. Throws ConfigError.
std::vector<EvalGroup> parse_groups(const std::string& list);

ConditionSequence condition_for_group(const ConditionSequence& full, const EvalGroup& group);

struct GroupScores {
  std::string name;
  double chord_recall_root = 0.0;
  double chord_recall_full = 0.0;
  double beat_f1 = 0.0;
  std::size_t samples = 0;
};

struct EvalReport {
  std::vector<GroupScores> groups;
  GroupScores baseline;
  double chance_root = 0.0;

  /// Throws IndexError for an unknown group.
  const GroupScores& group(const std::string& name) const;
  std::string csv() const;
  std::string table() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct ProtocolOptions {
  std::size_t samples_per_example = 4;
  SamplingOptions sampling;
  std::uint64_t seed = 0;
  std::size_t window = 16;  // chord recall window, one chord period
  int tolerance = 3;        // beat matching tolerance in frames
};

/// Generates samples_per_example sequences per test example and group (prompts cycle through
/// the fixed table) and scores them against the stored chords and pulses. The baseline row is
/// always included.
EvalReport run_protocol(const AdaptedModel<float>& model, const std::vector<SyntheticExample>& test,
                        const std::vector<EvalGroup>& groups, const ProtocolOptions& options);

}  // namespace cmad
