// Copyright 2026 The cmad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cmad/evaluation/protocol.hpp"
#include "cmad/evaluation/synthetic.hpp"
#include "cmad/model/config.hpp"
#include "cmad/training/trainer.hpp"

namespace cmad {

/// Everything a run needs, read from one flat key=value file. Defaults are the reference toy
/// configuration. Unknown keys are rejected and every value is validated on load.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  SyntheticSpec synthetic;
  ProtocolOptions eval;
  std::size_t pretrain_epochs = 0;
  double pretrain_lr = 2e-3;
  std::size_t pretrain_batch_size = 4;
  std::uint64_t data_seed = 1;
  std::string base_checkpoint;
  std::string out_dir;
  std::string checkpoint;
  std::string dataset;

  RunConfig();
  void validate() const;
  std::string to_text() const;
  static RunConfig from_text(std::string_view text, std::string_view source = "<config>");
  static RunConfig read(const std::filesystem::path& path);
};

}  // namespace cmad
