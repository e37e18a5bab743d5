// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cmad/training/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "cmad/errors.hpp"
#include "cmad/evaluation/metrics.hpp"
#include "cmad/model/generation.hpp"
#include "cmad/numerics/checkpoint.hpp"
#include "cmad/numerics/checksum.hpp"

namespace cmad {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;
constexpr std::uint64_t kValidationStream = 0x56414cULL;
constexpr std::uint64_t kEvalStream = 0x4556414cULL;
constexpr std::uint64_t kPretrainStream = 0x505245ULL;

ConditionSequence crop_condition(const ConditionSequence& c, std::size_t start, std::size_t len) {
  auto sub = [&](const auto& v) { return std::decay_t<decltype(v)>(v.begin() + start, v.begin() + start + len); };
  ConditionSequence out;
  out.chords = sub(c.chords);
  out.piano_roll = sub(c.piano_roll);
  out.acoustic = sub(c.acoustic);
  out.midi_masked = sub(c.midi_masked);
  out.acoustic_masked = sub(c.acoustic_masked);
  out.frame_rate = c.frame_rate;
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = derived_rng(seed, kShuffleStream, epoch);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

void append_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::size_t leading_epoch(const std::string& row) {
  std::size_t epoch = 0;
  std::from_chars(row.data(), row.data() + row.size(), epoch);
  return epoch;
}

void truncate_log(const std::filesystem::path& path, std::size_t last_epoch) {
  const auto lines = read_lines(path);
  std::string kept;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i == 0 || leading_epoch(lines[i]) <= last_epoch) kept += lines[i] + "\n";
  }
  write_text(path, kept);
}

void restore_best(const std::filesystem::path& val_csv, TrainResult& result) {
  const auto lines = read_lines(val_csv);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto comma = lines[i].find(',');
    if (comma == std::string::npos) continue;
    const double loss = std::stod(lines[i].substr(comma + 1));
    if (loss < result.best_val_loss) {
      result.best_val_loss = loss;
      result.best_epoch = leading_epoch(lines[i]);
    }
  }
}

struct ValidationScores {
  double loss = 0.0;
  double root = 0.0;
  double full = 0.0;
  double beat = 0.0;
};

ValidationScores validate_epoch(const AdaptedModel<float>& model, const SyntheticDataset& data,
                                const TrainConfig& config, std::size_t epoch) {
  ValidationScores s;
  const auto& split = data.val.empty() ? data.train : data.val;
  for (std::size_t i = 0; i < split.size(); ++i) {
    auto rng = derived_rng(config.seed, kValidationStream, i);
    auto ex = make_training_example(split[i], config.segment_frames, config.mask_rate, config.granularity, rng);
    s.loss += example_loss(model, ex);
  }
  s.loss /= static_cast<double>(split.size());
  if (config.eval_samples == 0) return s;
  std::size_t runs = 0;
  SamplingOptions sampling;
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& ex = split[i];
    for (std::size_t k = 0; k < config.eval_samples; ++k) {
      auto rng = derived_rng(config.seed ^ kEvalStream, epoch, i * config.eval_samples + k);
      const auto tokens = generate(model, ex.condition, static_cast<int>(k % kPromptTexts.size()), sampling, rng);
      s.root += chord_recall(tokens, ex.chords, RecallMode::root, data.spec.chord_period);
      s.full += chord_recall(tokens, ex.chords, RecallMode::full, data.spec.chord_period);
      s.beat += beat_f_measure(hit_frames(tokens), ex.pulses).f1;
      ++runs;
    }
  }
  s.root /= static_cast<double>(runs);
  s.full /= static_cast<double>(runs);
  s.beat /= static_cast<double>(runs);
  return s;
}

void check_frozen(const AdaptedModel<float>& model, const std::map<std::string, std::string>& reference,
                  std::size_t epoch) {
  const auto now = frozen_checksums(model.parameters());
  if (now != reference) {
    for (const auto& [name, digest] : reference) {
      auto it = now.find(name);
      if (it == now.end() || it->second != digest) {
        throw StateError(fmt::format("frozen parameter '{}' changed during epoch {}", name, epoch));
      }
    }
    throw StateError(fmt::format("set of frozen parameters changed during epoch {}", epoch));
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (warmup_epochs > epochs && epochs > 0) {
    throw ConfigError(fmt::format("warmup_epochs {} exceeds epochs {}", warmup_epochs, epochs));
  }
  if (!(mask_rate >= 0.0 && mask_rate <= 1.0)) throw ConfigError(fmt::format("mask rate {} outside [0, 1]", mask_rate));
  if (!(base_lr > 0.0)) throw ConfigError("base_lr must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (segment_frames == 0) throw ConfigError("segment_frames must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
}

int sample_prompt(std::mt19937_64& rng, std::size_t table_size) {
  if (table_size == 0) throw ConfigError("prompt table is empty");
  return static_cast<int>(std::uniform_int_distribution<std::size_t>(0, table_size - 1)(rng));
}

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

TrainingExample make_training_example(const SyntheticExample& example, std::size_t segment_frames, double mask_rate,
                                      MaskGranularity granularity, std::mt19937_64& rng) {
  const std::size_t n = example.targets.size();
  const std::size_t len = std::min(n, segment_frames);
  const std::size_t start = n > len ? std::uniform_int_distribution<std::size_t>(0, n - len)(rng) : 0;
  TrainingExample out;
  out.targets.assign(example.targets.begin() + static_cast<std::ptrdiff_t>(start),
                     example.targets.begin() + static_cast<std::ptrdiff_t>(start + len));
  out.inputs.reserve(len);
  out.inputs.push_back(start == 0 ? kStartToken : example.targets[start - 1]);
  out.inputs.insert(out.inputs.end(), out.targets.begin(), out.targets.end() - 1);
  out.condition = apply_masking(crop_condition(example.condition, start, len), mask_rate, rng, granularity);
  out.prompt_id = sample_prompt(rng);
  return out;
}

double example_loss(const AdaptedModel<float>& model, const TrainingExample& example, bool use_adaptor) {
  Tape<float> tape;
  typename AdaptedModel<float>::ForwardOptions opts;
  opts.use_adaptor = use_adaptor;
  auto logits = model.forward(tape, example.inputs, example.condition, example.prompt_id, opts);
  return ops::cross_entropy(logits, std::span<const int>(example.targets)).value()[0];
}

double training_step(AdaptedModel<float>& model, std::span<const TrainingExample> batch, Adam<float>& optimizer,
                     const StepOptions& options) {
  if (batch.empty()) throw StateError("training step on an empty batch");
  const float seed = 1.0f / static_cast<float>(batch.size());
  double total = 0.0;
  for (const auto& ex : batch) {
    ForwardTrace trace;
    try {
      Tape<float> tape;
      typename AdaptedModel<float>::ForwardOptions opts;
      opts.use_adaptor = options.use_adaptor;
      opts.trace = &trace;
      auto logits = model.forward(tape, ex.inputs, ex.condition, ex.prompt_id, opts);
      auto loss = ops::cross_entropy(logits, std::span<const int>(ex.targets));
      total += loss.value()[0];
      tape.backward(loss, seed);
    } catch (const NumericError& e) {
      std::string norms;
      for (std::size_t i = 0; i < trace.residual_rms.size(); ++i) {
        norms += fmt::format("{}layer {}: {:.6g}", i ? ", " : "", i, trace.residual_rms[i]);
      }
      throw NumericError(fmt::format("non-finite value in training step ({}); residual RMS per layer: [{}]",
                                     e.what(), norms));
    }
  }
  clip_grad_norm(model.parameters(), options.clip_norm);
  optimizer.step(model.parameters(), options.lr);
  return total / static_cast<double>(batch.size());
}

std::string metrics_header(const std::vector<std::size_t>& adapted_layers) {
  std::string h = "epoch,step,loss,lr,chord_recall_root,chord_recall_full,beat_f1";
  for (auto l : adapted_layers) h += fmt::format(",gate_l{}", l);
  return h + "\n";
}

std::string metrics_row(const EpochRecord& r) {
  std::string row = fmt::format("{},{},{:.6f},{:.6g},{:.6f},{:.6f},{:.6f}", r.epoch, r.step, r.loss, r.lr,
                                r.chord_recall_root, r.chord_recall_full, r.beat_f1);
  for (double g : r.gates) row += fmt::format(",{:.6f}", g);
  return row + "\n";
}

std::filesystem::path state_path_for(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p.replace_extension(".state");
  return p;
}

void write_train_state(const std::filesystem::path& path, const TrainState& state) {
  std::vector<NamedTensor> tensors;
  tensors.push_back({"state.epoch", Tensor<float>::scalar(static_cast<float>(state.epoch))});
  tensors.push_back({"state.step", Tensor<float>::scalar(static_cast<float>(state.optimizer.step_count()))});
  for (const auto& [name, m] : state.optimizer.first_moments()) tensors.push_back({"adam.m." + name, m});
  for (const auto& [name, v] : state.optimizer.second_moments()) tensors.push_back({"adam.v." + name, v});
  write_checkpoint(path, tensors);
}

TrainState read_train_state(const std::filesystem::path& path) {
  TrainState s;
  bool have_epoch = false, have_step = false;
  for (auto& nt : read_checkpoint(path)) {
    if (nt.name == "state.epoch") {
      s.epoch = static_cast<std::size_t>(nt.tensor[0]);
      have_epoch = true;
    } else if (nt.name == "state.step") {
      s.optimizer.set_step_count(static_cast<std::size_t>(nt.tensor[0]));
      have_step = true;
    } else if (nt.name.rfind("adam.m.", 0) == 0) {
      s.optimizer.first_moments().emplace(nt.name.substr(7), std::move(nt.tensor));
    } else if (nt.name.rfind("adam.v.", 0) == 0) {
      s.optimizer.second_moments().emplace(nt.name.substr(7), std::move(nt.tensor));
    } else {
      throw LoadError(fmt::format("{}: unexpected tensor '{}' in training state", path.string(), nt.name));
    }
  }
  if (!have_epoch || !have_step) throw LoadError(path.string() + ": missing epoch or step in training state");
  return s;
}

TrainResult fine_tune(AdaptedModel<float>& model, const SyntheticDataset& data, const TrainConfig& config,
                      const TrainOutputs& outputs, const TrainState* resume) {
  config.validate();
  if (data.train.empty()) throw ConfigError("training set is empty");
  model.set_trainable(false, true);

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  Adam<float> optimizer;
  std::size_t first_epoch = 1;
  if (resume) {
    optimizer = resume->optimizer;
    first_epoch = resume->epoch + 1;
  }
  const std::size_t n = data.train.size();
  const std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t warmup_steps = config.warmup_epochs * steps_per_epoch;
  const auto frozen = frozen_checksums(model.parameters());

  const bool write = !outputs.dir.empty();
  const auto csv = outputs.dir / "metrics.csv";
  const auto val_csv = outputs.dir / "validation.csv";
  if (write) {
    std::filesystem::create_directories(outputs.dir);
    if (resume && std::filesystem::exists(csv) && std::filesystem::exists(val_csv)) {
      // Continue the logs of the interrupted run; rows past the resume epoch are dropped.
      truncate_log(csv, resume->epoch);
      truncate_log(val_csv, resume->epoch);
      restore_best(val_csv, result);
    } else {
      write_text(csv, metrics_header(model.config().adapted_layer_indices()));
      write_text(val_csv, "epoch,val_loss\n");
    }
  }

  std::vector<TrainingExample> batch;
  for (std::size_t epoch = first_epoch; epoch <= config.epochs; ++epoch) {
    const auto order = epoch_order(n, config.seed, epoch);
    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      batch.clear();
      for (std::size_t k = b * config.batch_size; k < std::min(n, (b + 1) * config.batch_size); ++k) {
        auto rng = derived_rng(config.seed, epoch, order[k]);
        batch.push_back(
            make_training_example(data.train[order[k]], config.segment_frames, config.mask_rate, config.granularity, rng));
      }
      lr = lr_schedule(optimizer.step_count() + 1, warmup_steps, config.base_lr);
      loss_sum += training_step(model, batch, optimizer, {lr, config.clip_norm, true});
    }
    check_frozen(model, frozen, epoch);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.step = optimizer.step_count();
    rec.loss = loss_sum / static_cast<double>(steps_per_epoch);
    rec.lr = lr;
    const auto val = validate_epoch(model, data, config, epoch);
    rec.val_loss = val.loss;
    rec.chord_recall_root = val.root;
    rec.chord_recall_full = val.full;
    rec.beat_f1 = val.beat;
    for (std::size_t s = 0; s < model.adapted_count(); ++s) rec.gates.push_back(std::fabs(model.gate(s).value[0]));
    result.epochs.push_back(rec);

    const bool best = rec.val_loss < result.best_val_loss;
    if (best) {
      result.best_val_loss = rec.val_loss;
      result.best_epoch = epoch;
    }
    if (write) {
      append_text(csv, metrics_row(rec));
      append_text(val_csv, fmt::format("{},{:.6f}\n", epoch, rec.val_loss));
      const auto last = outputs.dir / "last.ckpt";
      save_model(model, last, config_path_for(last));
      write_train_state(state_path_for(last), TrainState{epoch, optimizer});
      if (best) {
        const auto b = outputs.dir / "best.ckpt";
        save_model(model, b, config_path_for(b));
      }
    }
    if (outputs.on_epoch) outputs.on_epoch(rec);
  }
  result.steps = optimizer.step_count();
  return result;
}

std::vector<double> pretrain_base(AdaptedModel<float>& model, const SyntheticDataset& data, const TrainConfig& config,
                                  const std::function<void(std::size_t, double)>& on_epoch) {
  config.validate();
  if (data.train.empty()) throw ConfigError("training set is empty");
  model.set_trainable(true, false);
  Adam<float> optimizer;
  const std::size_t n = data.train.size();
  const std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t warmup_steps = config.warmup_epochs * steps_per_epoch;
  std::vector<double> losses;
  std::vector<TrainingExample> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = epoch_order(n, config.seed ^ kPretrainStream, epoch);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      batch.clear();
      for (std::size_t k = b * config.batch_size; k < std::min(n, (b + 1) * config.batch_size); ++k) {
        auto rng = derived_rng(config.seed ^ kPretrainStream, epoch, order[k]);
        batch.push_back(make_training_example(data.train[order[k]], config.segment_frames, 1.0, config.granularity, rng));
      }
      const double lr = lr_schedule(optimizer.step_count() + 1, warmup_steps, config.base_lr);
      loss_sum += training_step(model, batch, optimizer, {lr, config.clip_norm, false});
    }
    losses.push_back(loss_sum / static_cast<double>(steps_per_epoch));
    if (on_epoch) on_epoch(epoch, losses.back());
  }
  model.set_trainable(false, true);
  return losses;
}

}  // namespace cmad
