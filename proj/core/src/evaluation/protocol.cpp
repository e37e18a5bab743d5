// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/evaluation/protocol.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "cmad/errors.hpp"
#include "cmad/evaluation/metrics.hpp"

namespace cmad {
namespace {

constexpr std::size_t kBaselineStream = 0xBA5E;

GroupScores score_group(const AdaptedModel<float>& model, const std::vector<SyntheticExample>& test,
                        const EvalGroup& group, std::size_t group_index, const ProtocolOptions& options) {
  GroupScores s;
  s.name = group.name;
  std::size_t scored_frames = 0;
  double root_hits = 0.0;
  double full_hits = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& ex = test[i];
    const auto cond = condition_for_group(ex.condition, group);
    std::size_t frames = 0;
    for (const auto& c : ex.chords) frames += c.no_chord ? 0 : 1;
    for (std::size_t k = 0; k < options.samples_per_example; ++k) {
      std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                        static_cast<std::uint32_t>(group_index), static_cast<std::uint32_t>(i),
                        static_cast<std::uint32_t>(k)};
      std::mt19937_64 rng(seq);
      const int prompt = static_cast<int>(k % kPromptTexts.size());
      const auto tokens = generate(model, cond, prompt, options.sampling, rng);
      root_hits += chord_recall(tokens, ex.chords, RecallMode::root, options.window) * static_cast<double>(frames);
      full_hits += chord_recall(tokens, ex.chords, RecallMode::full, options.window) * static_cast<double>(frames);
      scored_frames += frames;
      s.beat_f1 += beat_f_measure(hit_frames(tokens), ex.pulses, options.tolerance).f1;
      ++s.samples;
    }
  }
  if (scored_frames) {
    s.chord_recall_root = root_hits / static_cast<double>(scored_frames);
    s.chord_recall_full = full_hits / static_cast<double>(scored_frames);
  } else {
    s.chord_recall_root = s.chord_recall_full = 1.0;
  }
  if (s.samples) s.beat_f1 /= static_cast<double>(s.samples);
  return s;
}

}  // namespace

std::vector<EvalGroup> standard_groups() {
  return {{"chord-only", true, false, false},
          {"midi-only", true, true, false},
          {"drums-only", true, false, true},
          {"full", true, true, true}};
}

EvalGroup baseline_group() { return {"baseline", false, false, false}; }

std::vector<EvalGroup> parse_groups(const std::string& list) {
  if (list.empty() || list == "all") return standard_groups();
  const auto known = standard_groups();
  std::vector<EvalGroup> out;
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    bool found = false;
    for (const auto& g : known) {
      if (g.name == name) {
        out.push_back(g);
        found = true;
      }
    }
    if (!found) {
      throw ConfigError(fmt::format("unknown evaluation group '{}' (expected chord-only, midi-only, drums-only, full)",
                                    name));
    }
  }
  if (out.empty()) throw ConfigError("no evaluation group selected");
  return out;
}

ConditionSequence condition_for_group(const ConditionSequence& full, const EvalGroup& group) {
  auto c = with_channel_masks(full, !group.midi, !group.drums);
  return group.chords ? c : without_chords(std::move(c));
}

const GroupScores& EvalReport::group(const std::string& name) const {
  if (name == baseline.name) return baseline;
  for (const auto& g : groups) {
    if (g.name == name) return g;
  }
  throw IndexError("no evaluation group named '" + name + "'");
}

std::string EvalReport::csv() const {
  std::string out = "group,chord_recall_root,chord_recall_full,beat_f1,samples\n";
  auto row = [&](const GroupScores& g) {
    out += fmt::format("{},{:.6f},{:.6f},{:.6f},{}\n", g.name, g.chord_recall_root, g.chord_recall_full, g.beat_f1,
                       g.samples);
  };
  for (const auto& g : groups) row(g);
  row(baseline);
  return out;
}

std::string EvalReport::table() const {
  std::string out = fmt::format("{:<12} {:>10} {:>10} {:>8} {:>8}\n", "group", "chord_rec", "chord*_rec", "beat_f1",
                                "samples");
  auto row = [&](const GroupScores& g) {
    out += fmt::format("{:<12} {:>10.3f} {:>10.3f} {:>8.3f} {:>8}\n", g.name, g.chord_recall_root,
                       g.chord_recall_full, g.beat_f1, g.samples);
  };
  for (const auto& g : groups) row(g);
  row(baseline);
  out += fmt::format("chance root recall (uniform tokens): {:.3f}\n", chance_root);
  return out;
}

void EvalReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << csv();
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

EvalReport run_protocol(const AdaptedModel<float>& model, const std::vector<SyntheticExample>& test,
                        const std::vector<EvalGroup>& groups, const ProtocolOptions& options) {
  if (test.empty()) throw ConfigError("test set is empty");
  EvalReport report;
  for (std::size_t g = 0; g < groups.size(); ++g) report.groups.push_back(score_group(model, test, groups[g], g, options));
  report.baseline = score_group(model, test, baseline_group(), kBaselineStream, options);
  double chance = 0.0;
  for (const auto& ex : test) {
    chance += chance_root_recall(ex.chords, options.window, model.config().base.vocab_size);
  }
  report.chance_root = chance / static_cast<double>(test.size());
  return report;
}

}  // namespace cmad
