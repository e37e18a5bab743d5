// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

// Runs every acceptance check and prints one PASS/FAIL line per criterion.
// Usage: cmad_acceptance [--work-dir DIR] [--only N[,N...]]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cmad/errors.hpp"
#include "cmad/evaluation/metrics.hpp"
#include "cmad/evaluation/protocol.hpp"
#include "cmad/model/adapted_model.hpp"
#include "cmad/model/param_count.hpp"
#include "cmad/numerics/checksum.hpp"
#include "cmad/representation/chord.hpp"
#include "cmad/training/model_gradcheck.hpp"
#include "cmad/training/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using namespace cmad;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ConditionSequence random_condition(std::size_t frames, std::size_t vocab, std::mt19937_64& rng) {
  std::vector<ChordSymbol> chords(frames);
  std::vector<PianoRollFrame> roll(frames);
  std::vector<int> acoustic(frames);
  const auto& q = chord_qualities();
  for (std::size_t i = 0; i < frames; ++i) {
    const int root = static_cast<int>(rng() % 12);
    if (rng() % 8 != 0) chords[i] = ChordSymbol::make(root, static_cast<int>(rng() % 12), q[rng() % q.size()].bitmap);
    for (int n = 0; n < 3; ++n) roll[i].set(rng() % kPianoRollPitches);
    acoustic[i] = static_cast<int>(rng() % vocab);
  }
  auto cond = ConditionSequence::make(chords, roll, acoustic);
  for (std::size_t i = 0; i < frames; ++i) {
    cond.midi_masked[i] = rng() % 3 == 0;
    cond.acoustic_masked[i] = rng() % 3 == 0;
  }
  return cond;
}

std::vector<int> random_tokens(std::size_t n, std::size_t vocab, std::mt19937_64& rng) {
  std::vector<int> t(n);
  for (auto& v : t) v = static_cast<int>(rng() % vocab);
  return t;
}

ModelConfig random_small_config(std::mt19937_64& rng) {
  ModelConfig c;
  c.base.n_layers = 2 + rng() % 3;
  c.base.n_heads = 2;
  c.base.d_model = 8 * (1 + rng() % 2);
  c.base.vocab_size = 64;
  c.base.max_sequence = 16;
  c.base.ffn_multiplier = 2;
  c.base.use_cross_attention = rng() % 2 == 0;
  c.adapted_layers = 1 + rng() % c.base.n_layers;
  c.init_std = 0.3;
  return c;
}

// Zero-gate identity.
Outcome criterion1() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto config = random_small_config(rng);
    const auto model = AdaptedModel<float>::build(config, rng());
    for (std::size_t s = 0; s < model.adapted_count(); ++s) {
      if (model.gate(s).value[0] != 0.0f) return {false, "gates are not initialized to zero"};
    }
    const std::size_t frames = 1 + rng() % config.base.max_sequence;
    const auto cond = random_condition(frames, config.base.vocab_size, rng);
    const auto tokens = random_tokens(frames, config.base.vocab_size, rng);
    const int prompt = static_cast<int>(rng() % 4);
    const auto adapted = model.logits(tokens, cond, prompt, true);
    Tape<float> tape;
    const auto base = model.base_forward(tape, tokens, prompt).value();
    for (std::size_t i = 0; i < adapted.size(); ++i) {
      worst = std::max(worst, static_cast<double>(std::fabs(adapted.storage()[i] - base.storage()[i])));
    }
  }
  return {worst < 1e-6, fmt::format("max |adapted - base| = {:.3e} over 100 triples (limit 1e-6)", worst)};
}

// Gradient fidelity in double precision.
Outcome criterion2() {
  const auto start = Clock::now();
  const auto config = gradcheck_config();
  ModelGradCheckOptions options;
  options.seed = 2026;
  const auto r = check_model_gradients(config, options);
  const double elapsed = seconds_since(start);
  const std::vector<std::string> classes{"cond.W_p", "cond.W_a", "cond.W_e", "cond.s_p",
                                         "cond.s_a", "cond.z_pos", "enc.input", "adaptor.gate"};
  std::vector<std::string> missing;
  for (const auto& cls : classes) {
    bool covered = false;
    for (const auto& [name, grad] : r.max_abs_grad) {
      if (name.rfind(cls, 0) == 0 && grad > 0.0 && r.per_parameter.count(name)) covered = true;
    }
    if (!covered) missing.push_back(cls);
  }
  const bool shape_ok = config.base.n_layers == 2 && config.base.d_model == 16 && config.base.vocab_size == 8 &&
                        config.adapted_layers == 2 && options.frames == 6;
  std::string detail = fmt::format("max rel error {:.3e} at {} over {} entries, {:.1f} s", r.max_rel_error,
                                   r.worst_parameter, r.checked, elapsed);
  if (!missing.empty()) {
    detail += "; uncovered:";
    for (const auto& m : missing) detail += " " + m;
  }
  if (!shape_ok) detail += "; configuration is not N=2, d=16, V=8, L=2, T=6";
  return {r.max_rel_error < 1e-4 && missing.empty() && shape_ok && elapsed < 60.0, detail};
}

// Frozen checksums after 500 optimizer steps.
Outcome criterion3() {
  ModelConfig config;
  config.base.n_layers = 3;
  config.base.d_model = 16;
  config.base.n_heads = 2;
  config.base.max_sequence = 32;
  config.adapted_layers = 2;
  SyntheticSpec spec;
  spec.length = 32;
  spec.chord_period = 8;
  spec.pulse_period = 8;
  spec.train_count = 40;
  const auto data = synthesize_dataset(spec, 31);
  auto model = AdaptedModel<float>::build(config, 32);
  const auto frozen_before = frozen_checksums(model.parameters());
  const auto gate_before = model.gate(0).value[0];

  Adam<float> adam;
  StepOptions step;
  step.lr = 2e-3;
  std::size_t steps = 0;
  for (std::size_t i = 0; steps < 500; ++i) {
    auto rng = derived_rng(33, 0, i);
    std::vector<TrainingExample> batch;
    for (std::size_t b = 0; b < 2; ++b) {
      batch.push_back(make_training_example(data.train[(2 * i + b) % data.train.size()], 24, config.mask_rate,
                                            MaskGranularity::sequence, rng));
    }
    training_step(model, batch, adam, step);
    ++steps;
  }
  const auto frozen_after = frozen_checksums(model.parameters());
  std::size_t changed = 0;
  for (const auto& [name, sum] : frozen_before) {
    const auto it = frozen_after.find(name);
    if (it == frozen_after.end() || it->second != sum) ++changed;
  }
  const bool moved = model.gate(0).value[0] != gate_before;
  return {changed == 0 && !frozen_before.empty() && frozen_before.size() == frozen_after.size() && moved,
          fmt::format("{} frozen tensors, {} changed after {} steps; adaptor moved: {}", frozen_before.size(),
                      changed, steps, moved ? "yes" : "no")};
}

std::vector<int> ones(const ChordFrame& f) {
  std::vector<int> out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] != 0.0f) out.push_back(static_cast<int>(i));
  }
  return out;
}

// Chord table rows and the full grammar roundtrip.
Outcome criterion4() {
  struct Row {
    const char* label;
    int root;
    int bass;
    std::vector<int> indices;
  };
  const std::vector<Row> table{{"C:maj", 0, 0, {0, 4, 7}}, {"D:maj", 2, 2, {0, 4, 7}}, {"D:min", 2, 2, {0, 3, 7}}};
  std::size_t failures = 0;
  for (const auto& row : table) {
    const auto c = parse_chord_label(row.label);
    std::bitset<12> bits;
    for (int i : row.indices) bits.set(static_cast<std::size_t>(i));
    if (c.no_chord || c.root != row.root || c.bass != row.bass || c.bitmap != bits) ++failures;
    if (decode_chord_frame(encode_chord_frame(c)) != c) ++failures;
  }
  std::size_t combos = 0;
  for (const auto& q : chord_qualities()) {
    for (int root = 0; root < 12; ++root) {
      for (int bass = 0; bass < 12; ++bass) {
        const auto chord = ChordSymbol::make(root, bass, q.bitmap);
        ++combos;
        if (decode_chord_frame(encode_chord_frame(chord)) != chord) ++failures;
        if (parse_chord_label(format_chord_label(chord)) != chord) ++failures;
      }
    }
  }
  const bool cmaj = ones(encode_chord_frame(parse_chord_label("C:maj"))) == std::vector<int>{0, 12, 24, 28, 31};
  return {failures == 0 && cmaj && combos == 9 * 12 * 12,
          fmt::format("{} table rows, {} grammar combinations, {} failures; C:maj ones at {{0,12,24,28,31}}: {}",
                      table.size(), combos, failures, cmaj ? "yes" : "no")};
}

// Training recipe for the reference toy configuration.
constexpr std::size_t kPretrainEpochs = 15;
constexpr std::size_t kPretrainBatch = 4;
constexpr double kPretrainLr = 5e-3;
constexpr std::size_t kFineTuneEpochs = 150;
constexpr std::size_t kFineTuneBatch = 1;
constexpr double kFineTuneLr = 2e-3;
constexpr std::size_t kFineTuneSegment = 32;

struct ToyRun {
  bool ok = false;
  std::string error;
  EvalReport report;
  double chance_root = 0.0;
  double elapsed = 0.0;
};

const ToyRun& toy_run() {
  static const ToyRun run = [] {
    ToyRun r;
    const auto start = Clock::now();
    try {
      ModelConfig config;  // N=4, d=64, H=4, L=2, V=64, T=128, r=0.4
      SyntheticSpec spec;  // 200 training examples of 128 frames
      const auto data = synthesize_dataset(spec, 1);
      auto model = AdaptedModel<float>::build(config, 7);

      TrainConfig pre;
      pre.epochs = kPretrainEpochs;
      pre.batch_size = kPretrainBatch;
      pre.base_lr = kPretrainLr;
      pre.warmup_epochs = 2;
      pre.seed = 5;
      pretrain_base(model, data, pre, [&](std::size_t epoch, double loss) {
        fmt::print("  pretrain {:2}/{} loss {:.4f} ({:.0f} s)\n", epoch, kPretrainEpochs, loss, seconds_since(start));
        std::fflush(stdout);
      });

      TrainConfig ft = pre;
      ft.epochs = kFineTuneEpochs;
      ft.batch_size = kFineTuneBatch;
      ft.base_lr = kFineTuneLr;
      ft.segment_frames = kFineTuneSegment;
      ft.mask_rate = config.mask_rate;
      TrainOutputs outputs;
      outputs.on_epoch = [&](const EpochRecord& e) {
        fmt::print("  fine-tune {:3}/{} loss {:.4f} val root {:.3f} beat {:.3f} ({:.0f} s)\n", e.epoch,
                   kFineTuneEpochs, e.loss, e.chord_recall_root, e.beat_f1, seconds_since(start));
        std::fflush(stdout);
      };
      fine_tune(model, data, ft, outputs);

      ProtocolOptions po;
      po.seed = 3;
      po.window = spec.chord_period;
      r.report = run_protocol(model, data.test, standard_groups(), po);

      // Chance level by simulation over the same chord schedules.
      std::mt19937_64 rng(17);
      double sum = 0.0;
      for (const auto& ex : data.test) {
        sum += monte_carlo_recall(ex.chords, RecallMode::root, spec.chord_period, spec.vocab_size, 4000, rng);
      }
      r.chance_root = sum / static_cast<double>(data.test.size());
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.elapsed = seconds_since(start);
    std::fputs(r.report.table().c_str(), stdout);
    return r;
  }();
  return run;
}

// Synthetic controllability.
Outcome criterion5() {
  const auto& run = toy_run();
  if (!run.ok) return {false, "toy training failed: " + run.error};
  const auto& rep = run.report;
  const double full = rep.group("full").chord_recall_root;
  const double chord_only = rep.group("chord-only").chord_recall_root;
  const double base = rep.baseline.chord_recall_root;
  const double beat_gain = std::min(rep.group("drums-only").beat_f1, rep.group("full").beat_f1) - rep.baseline.beat_f1;
  const bool a = full >= 0.8;
  const bool b = base <= run.chance_root + 0.1;
  const bool c = full >= chord_only;
  const bool d = beat_gain >= 0.3;
  const bool t = run.elapsed <= 1800.0;
  return {a && b && c && d && t,
          fmt::format("(a) full root {:.3f} >= 0.8 {}; (b) baseline {:.3f} <= chance {:.3f} + 0.1 {}; "
                      "(c) full {:.3f} >= chord-only {:.3f} {}; (d) min drums-present beat gain {:.3f} >= 0.3 {}; "
                      "{:.0f} s <= 1800 s {}",
                      full, a ? "ok" : "NO", base, run.chance_root, b ? "ok" : "NO", full, chord_only,
                      c ? "ok" : "NO", beat_gain, d ? "ok" : "NO", run.elapsed, t ? "ok" : "NO")};
}

// Masking robustness on the same r = 0.4 model.
Outcome criterion6() {
  const auto& run = toy_run();
  if (!run.ok) return {false, "toy training failed: " + run.error};
  const double chord_only = run.report.group("chord-only").chord_recall_root;
  const double base = run.report.baseline.chord_recall_root;
  return {chord_only - base >= 0.2, fmt::format("chord-only root {:.3f} - baseline {:.3f} = {:.3f} (need >= 0.2)",
                                                chord_only, base, chord_only - base)};
}

// Trainable fraction at full scale.
Outcome criterion7() {
  std::vector<double> fractions;
  std::string detail;
  for (std::size_t l : {12, 24, 36, 48}) {
    const auto n = count_parameters(full_scale_config(l));
    fractions.push_back(n.fraction());
    detail += fmt::format("L={} {:.3f}% ", l, 100.0 * n.fraction());
  }
  const bool increasing = std::adjacent_find(fractions.begin(), fractions.end(), std::greater_equal<>()) ==
                          fractions.end();
  return {increasing && fractions.back() < 0.04, detail + (increasing ? "(strictly increasing)" : "(not increasing)")};
}

// Metric examples and the full <= root property.
Outcome criterion8() {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* what) {
    if (!ok) failed.emplace_back(what);
  };
  auto near = [](double a, double b) { return std::fabs(a - b) < 1e-12; };

  std::mt19937_64 rng(81);
  SyntheticSpec spec;
  const auto ex = synthesize_example(spec, rng, "metrics");
  check(near(chord_recall(ex.targets, ex.chords, RecallMode::root, spec.chord_period), 1.0), "oracle root");
  check(near(chord_recall(ex.targets, ex.chords, RecallMode::full, spec.chord_period), 1.0), "oracle full");

  // Uniform tokens against a brute-force expectation over the schedule.
  double expected = 0.0;
  const double miss = 1.0 - 4.0 / static_cast<double>(spec.vocab_size);
  std::size_t scored = 0;
  for (std::size_t w = 0; w < spec.length; w += spec.chord_period) {
    for (std::size_t f = w; f < std::min(spec.length, w + spec.chord_period); ++f) {
      if (ex.chords[f].no_chord) continue;
      expected += 1.0 - std::pow(miss, static_cast<double>(std::min(spec.chord_period, spec.length - w)));
      ++scored;
    }
  }
  expected /= static_cast<double>(scored);
  std::uniform_int_distribution<int> tok(0, static_cast<int>(spec.vocab_size) - 1);
  double sum = 0.0;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    std::vector<int> gen(spec.length);
    for (auto& t : gen) t = tok(rng);
    sum += chord_recall(gen, ex.chords, RecallMode::root, spec.chord_period);
  }
  check(std::fabs(sum / trials - expected) < 0.01, "uniform tokens vs chance");

  const std::vector<int> refs{10, 20, 30};
  check(near(beat_f_measure(refs, refs, 3).f1, 1.0), "identical hits");
  const std::vector<int> shifted{14, 24, 34};
  check(near(beat_f_measure(shifted, refs, 3).f1, 0.0), "shift tolerance+1");
  const auto hand = beat_f_measure(std::vector<int>{11, 29}, refs, 3);
  check(near(hand.precision, 1.0) && near(hand.recall, 2.0 / 3.0) && near(hand.f1, 0.8), "hand matching");

  std::size_t violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto sample = synthesize_example(spec, rng, "random");
    std::vector<int> gen(spec.length);
    for (auto& t : gen) t = rng() % 2 ? tok(rng) : sample.targets[rng() % spec.length];
    const std::size_t window = 1 + rng() % 32;
    if (chord_recall(gen, sample.chords, RecallMode::full, window) >
        chord_recall(gen, sample.chords, RecallMode::root, window)) {
      ++violations;
    }
  }
  check(violations == 0, "full <= root");
  std::string detail = fmt::format("examples and 1000 random instances, {} full > root violations", violations);
  for (const auto& f : failed) detail += "; failed: " + f;
  return {failed.empty(), detail};
}

// Causality of the token stream with open gates.
Outcome criterion9() {
  std::mt19937_64 rng(909);
  double worst = 0.0;
  int trials = 0;
  while (trials < 1000) {
    const auto config = random_small_config(rng);
    auto model = AdaptedModel<float>::build(config, rng());
    std::normal_distribution<float> gate(0.0f, 1.0f);
    for (std::size_t s = 0; s < model.adapted_count(); ++s) model.gate(s).value[0] = gate(rng);
    const std::size_t frames = 2 + rng() % (config.base.max_sequence - 1);
    const auto cond = random_condition(frames, config.base.vocab_size, rng);
    const auto tokens = random_tokens(frames, config.base.vocab_size, rng);
    const int prompt = static_cast<int>(rng() % 4);
    const auto ref = model.logits(tokens, cond, prompt);
    for (int k = 0; k < 10 && trials < 1000; ++k, ++trials) {
      const std::size_t t = 1 + rng() % (frames - 1);
      auto changed = tokens;
      changed[t] = static_cast<int>((changed[t] + 1 + rng() % (config.base.vocab_size - 1)) % config.base.vocab_size);
      const auto out = model.logits(changed, cond, prompt);
      for (std::size_t i = 0; i < t; ++i)
        for (std::size_t v = 0; v < config.base.vocab_size; ++v)
          worst = std::max(worst, static_cast<double>(std::fabs(out(i, v) - ref(i, v))));
    }
  }
  return {worst <= 1e-6, fmt::format("max change before the perturbed position {:.3e} over {} trials", worst, trials)};
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Two CLI training runs with one seed.
Outcome criterion10(const fs::path& work) {
#ifndef CMAD_CLI_PATH
  (void)work;
  return {false, "command-line tool was not built (CMAD_BUILD_TOOLS=OFF)"};
#else
  const fs::path dir = work / "reproducibility";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "n_layers=2\nd_model=32\nn_heads=2\nT_max=64\nL=2\nlength=64\nchord_period=16\npulse_period=16\n"
           "train_count=24\nval_count=4\ntest_count=4\nsegment_frames=48\nepochs=3\nwarmup_epochs=1\nbatch_size=4\n"
           "pretrain_epochs=1\nseed=42\n";
  }
  std::vector<std::string> logs;
  for (const char* run : {"a", "b"}) {
    const auto cmd = fmt::format("\"{}\" train --config \"{}\" --out-dir \"{}\" --quiet > \"{}\" 2>&1", CMAD_CLI_PATH,
                                 (dir / "run.cfg").string(), (dir / run).string(),
                                 (dir / (std::string(run) + ".log")).string());
    const int rc = std::system(cmd.c_str());
    if (rc != 0) return {false, fmt::format("train run {} exited with status {}", run, rc)};
  }
  std::vector<std::string> differing;
  for (const char* f : {"last.ckpt", "best.ckpt", "metrics.csv", "validation.csv", "last.state"}) {
    const auto a = read_bytes(dir / "a" / f);
    const auto b = read_bytes(dir / "b" / f);
    if (a.empty() || a != b) differing.emplace_back(f);
  }
  std::string detail = "last/best checkpoints, optimizer state, metrics and validation CSVs ";
  if (differing.empty()) return {true, detail + "byte-identical across two runs"};
  detail += "differ or are missing:";
  for (const auto& d : differing) detail += " " + d;
  return {false, detail};
#endif
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "cmad_acceptance";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--work-dir" && i + 1 < argc) {
      work = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string item; std::getline(ss, item, ',');) only.insert(std::stoi(item));
    } else {
      std::fprintf(stderr, "usage: %s [--work-dir DIR] [--only N[,N...]]\n", argv[0]);
      return 2;
    }
  }
  fs::create_directories(work);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"zero-gate identity", criterion1},
      {"gradient fidelity", criterion2},
      {"freezing discipline", criterion3},
      {"chord encoding golden suite", criterion4},
      {"synthetic controllability", criterion5},
      {"masking robustness", criterion6},
      {"parameter accounting", criterion7},
      {"metric unit suite", criterion8},
      {"causality", criterion9},
      {"reproducibility", [&] { return criterion10(work); }},
  };

  int failures = 0;
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    const auto line = fmt::format("{} {:2} {}: {} [{:.1f} s]", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                                  o.detail, seconds_since(start));
    fmt::print("{}\n", line);
    std::fflush(stdout);
    lines.push_back(line);
    if (!o.pass) ++failures;
  }
  fmt::print("\nsummary\n");
  for (const auto& l : lines) fmt::print("{}\n", l);
  fmt::print("{} of {} criteria passed\n", lines.size() - static_cast<std::size_t>(failures), lines.size());
  return failures == 0 ? 0 : 1;
}
