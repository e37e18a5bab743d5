// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cmad/evaluation/synthetic.hpp"
#include "cmad/model/adapted_model.hpp"
#include "cmad/numerics/optimizer.hpp"

namespace cmad {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t warmup_epochs = 2;
  double base_lr = 2e-3;
  std::size_t batch_size = 8;
  double mask_rate = 0.4;
  std::uint64_t seed = 0;
  std::size_t segment_frames = 128;
  MaskGranularity granularity = MaskGranularity::sequence;
  double clip_norm = 1.0;
  /// Generated samples per validation example for the per-epoch metrics; 0 skips them.
  std::size_t eval_samples = 1;

  void validate() const;
};

struct TrainingExample {
  std::vector<int> inputs;
  std::vector<int> targets;
  ConditionSequence condition;
  int prompt_id = 0;
};

/// Uniform draw over a prompt table of `table_size` entries.
int sample_prompt(std::mt19937_64& rng, std::size_t table_size = kPromptTexts.size());

/// Random crop of `segment_frames` frames, channel masking and prompt draw.
TrainingExample make_training_example(const SyntheticExample& example, std::size_t segment_frames, double mask_rate,
                                      MaskGranularity granularity, std::mt19937_64& rng);

/// Deterministic generator for (seed, epoch, index); training and resume share it.
std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

struct StepOptions {
  double lr = 2e-3;
  double clip_norm = 1.0;
  bool use_adaptor = true;
};

/// Mean cross-entropy over the batch, backward, clipping and one Adam step on trainable
/// parameters. A non-finite value aborts with NumericError listing per-layer residual RMS.
double training_step(AdaptedModel<float>& model, std::span<const TrainingExample> batch, Adam<float>& optimizer,
                     const StepOptions& options);

/// Cross-entropy of one example without updating anything.
double example_loss(const AdaptedModel<float>& model, const TrainingExample& example, bool use_adaptor = true);

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
  double chord_recall_root = 0.0;
  double chord_recall_full = 0.0;
  double beat_f1 = 0.0;
  double val_loss = 0.0;
  std::vector<double> gates;  // |g_l| per adapted layer
};

/// Metrics CSV header for a model with the given adapted layer indices.
std::string metrics_header(const std::vector<std::size_t>& adapted_layers);
std::string metrics_row(const EpochRecord& record);

struct TrainOutputs {
  /// Directory for metrics.csv, last/best checkpoints and optimizer state. Empty writes nothing.
  std::filesystem::path dir;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::size_t steps = 0;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

/// Optimizer state saved next to a checkpoint so a run can continue at an epoch boundary.
struct TrainState {
  std::size_t epoch = 0;
  Adam<float> optimizer;
};
void write_train_state(const std::filesystem::path& path, const TrainState& state);
TrainState read_train_state(const std::filesystem::path& path);
std::filesystem::path state_path_for(const std::filesystem::path& checkpoint);

/// Trains the adaptor with the base frozen. With `resume`, training continues after
/// resume->epoch using its optimizer state; the model must already hold the matching weights.
TrainResult fine_tune(AdaptedModel<float>& model, const SyntheticDataset& data, const TrainConfig& config,
                      const TrainOutputs& outputs = {}, const TrainState* resume = nullptr);

/// Trains the base decoder alone on unconditioned next-token prediction, then freezes it again.
/// Returns the mean training loss per epoch.
std::vector<double> pretrain_base(AdaptedModel<float>& model, const SyntheticDataset& data, const TrainConfig& config,
                                  const std::function<void(std::size_t, double)>& on_epoch = {});

}  // namespace cmad
